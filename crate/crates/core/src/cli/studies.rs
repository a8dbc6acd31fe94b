use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::GroupSummary;
use crate::meta::StudyEffect;

const EFFECT_COLUMNS: [&str; 2] = ["effect", "variance"];
const SUMMARY_COLUMNS: [&str; 6] = ["n1", "mean1", "sd1", "n2", "mean2", "sd2"];
const MODERATOR_PREFIX: &str = "moderator:";

/// How study rows express their effect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    /// `study, effect, variance`
    Effect,
    /// `study, n1, mean1, sd1, n2, mean2, sd2` (group 1 is the control)
    Summary,
}

/// One parsed row: the effect plus its categorical columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub effect: StudyEffect,
    pub categories: BTreeMap<String, String>,
}

/// A study CSV. The schema is detected from the header; `moderator:NAME`
/// columns are numeric moderators and any other extra column is a
/// categorical variable usable with `--by`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudiesFile {
    pub schema: Schema,
    pub records: Vec<StudyRecord>,
    pub category_columns: Vec<String>,
    pub moderator_columns: Vec<String>,
}

fn parse_real(raw: &str, column: &str, line: u64) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::input(format!("line {line}: column '{column}' is not a number: '{raw}'")))?;
    if !v.is_finite() {
        return Err(Error::input(format!("line {line}: column '{column}' must be finite")));
    }
    Ok(v)
}

fn parse_count(raw: &str, column: &str, line: u64) -> Result<usize> {
    raw.parse()
        .map_err(|_| Error::input(format!("line {line}: column '{column}' must be a whole number: '{raw}'")))
}

impl StudiesFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file).map_err(|e| match e {
            Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let has = |c: &str| headers.iter().any(|h| h == c);
        let effect_cols = EFFECT_COLUMNS.iter().filter(|c| has(c)).count();
        let summary_cols = SUMMARY_COLUMNS.iter().filter(|c| has(c)).count();
        if !has("study") {
            return Err(Error::input("header must include a 'study' column"));
        }
        let schema = match (effect_cols, summary_cols) {
            (2, 0) => Schema::Effect,
            (0, 6) => Schema::Summary,
            (e, s) if e > 0 && s > 0 => {
                return Err(Error::input("header mixes the effect schema (effect, variance) and the summary schema (n1, mean1, sd1, n2, mean2, sd2)"))
            }
            _ => {
                return Err(Error::input(
                    "header matches neither schema: expected study,effect,variance or study,n1,mean1,sd1,n2,mean2,sd2",
                ))
            }
        };
        let mut seen = std::collections::HashSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::input(format!("duplicate column '{h}'")));
            }
        }
        let reserved = |h: &str| h == "study" || EFFECT_COLUMNS.contains(&h) || SUMMARY_COLUMNS.contains(&h);
        let moderator_columns: Vec<String> = headers
            .iter()
            .filter_map(|h| h.strip_prefix(MODERATOR_PREFIX).map(str::to_string))
            .collect();
        if moderator_columns.iter().any(|m| m.is_empty()) {
            return Err(Error::input("moderator columns need a name, as in 'moderator:year'"));
        }
        let category_columns: Vec<String> = headers
            .iter()
            .filter(|h| !reserved(h) && !h.starts_with(MODERATOR_PREFIX))
            .cloned()
            .collect();

        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let field = |name: &str| -> &str {
                headers
                    .iter()
                    .position(|h| h == name)
                    .and_then(|i| row.get(i))
                    .unwrap_or("")
            };
            let label = field("study");
            if label.is_empty() {
                return Err(Error::input(format!("line {line}: empty study label")));
            }
            let effect = match schema {
                Schema::Effect => StudyEffect::new(
                    label,
                    parse_real(field("effect"), "effect", line)?,
                    parse_real(field("variance"), "variance", line)?,
                ),
                Schema::Summary => {
                    let g = |i: u8| -> Result<GroupSummary> {
                        let n = parse_count(field(&format!("n{i}")), &format!("n{i}"), line)?;
                        let mean = parse_real(field(&format!("mean{i}")), &format!("mean{i}"), line)?;
                        let sd = parse_real(field(&format!("sd{i}")), &format!("sd{i}"), line)?;
                        GroupSummary::new(n, mean, sd)
                    };
                    StudyEffect::from_summaries(label, &g(1)?, &g(2)?)
                }
            }
            .map_err(|e| Error::input(format!("line {line}: {e}")))?;
            let mut effect = effect;
            for m in &moderator_columns {
                let col = format!("{MODERATOR_PREFIX}{m}");
                let raw = field(&col);
                if !raw.is_empty() {
                    effect.moderators.insert(m.clone(), parse_real(raw, &col, line)?);
                }
            }
            let categories: BTreeMap<String, String> = category_columns
                .iter()
                .map(|c| (c.clone(), field(c).to_string()))
                .filter(|(_, v)| !v.is_empty())
                .collect();
            if let Some(g) = categories.get("subgroup") {
                effect.subgroup = Some(g.clone());
            }
            records.push(StudyRecord { effect, categories });
        }
        let mut labels = std::collections::HashSet::new();
        for r in &records {
            if !labels.insert(r.effect.label.as_str()) {
                return Err(Error::input(format!("duplicate study label '{}'", r.effect.label)));
            }
        }
        Ok(Self {
            schema,
            records,
            category_columns,
            moderator_columns,
        })
    }

    pub fn studies(&self) -> Vec<StudyEffect> {
        self.records.iter().map(|r| r.effect.clone()).collect()
    }

    /// Studies with `subgroup` taken from the categorical column `column`.
    pub fn studies_by(&self, column: &str) -> Result<Vec<StudyEffect>> {
        if !self.category_columns.iter().any(|c| c == column) {
            return Err(Error::input(format!(
                "no column '{column}' to group by (available: {})",
                if self.category_columns.is_empty() { "none".to_string() } else { self.category_columns.join(", ") }
            )));
        }
        Ok(self
            .records
            .iter()
            .map(|r| {
                let mut e = r.effect.clone();
                e.subgroup = r.categories.get(column).cloned();
                e
            })
            .collect())
    }
}

/// Two-column raw-score CSV (control first, treatment second); blank cells
/// allow unequal group sizes.
pub fn read_scores(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let width = rdr.headers()?.len();
    if width != 2 {
        return Err(Error::input(format!(
            "{}: expected two columns (control, treatment), found {width}",
            path.display()
        )));
    }
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let (mut control, mut treatment) = (Vec::new(), Vec::new());
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        for (i, arm) in [&mut control, &mut treatment].into_iter().enumerate() {
            let raw = row.get(i).unwrap_or("");
            if !raw.is_empty() {
                arm.push(parse_real(raw, &headers[i], line)?);
            }
        }
    }
    Ok((control, treatment))
}
