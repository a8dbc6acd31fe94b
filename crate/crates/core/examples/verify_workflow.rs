//! The `verify` command end to end on a small studies file, driven through
//! the same entry point as the binary.
//!
//! `cargo run --example verify_workflow`

fn main() -> std::io::Result<()> {
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("studies.csv");
    std::fs::write(
        &input,
        "study,n1,mean1,sd1,n2,mean2,sd2,environment\n\
         Lab-A,12,61.0,14.0,12,58.0,15.0,java\n\
         Lab-B,10,55.0,12.0,10,60.0,11.0,java\n\
         Site-C,8,48.0,10.0,8,59.0,9.0,cpp\n\
         Site-D,9,50.0,11.0,9,62.0,10.0,cpp\n",
    )?;
    let out = dir.path().join("out");
    let args = [
        "replimeta".as_ref(),
        "verify".as_ref(),
        input.as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
        "--forest".as_ref(),
        "text".as_ref(),
    ];
    let code = replimeta::cli::run(args, &mut std::io::stdout(), &mut std::io::stderr());
    println!("\nexit code {code}");
    print!("{}", std::fs::read_to_string(out.join("forest.txt"))?);
    Ok(())
}
