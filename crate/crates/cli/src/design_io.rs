//! Design tables as JSON or CSV.

use std::fs;
use std::path::Path;

use psodesign_core::{Design, DesignPoint, FactorSpace};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRow {
    pub setting: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub factors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Log-determinant at the time of writing (informational).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_det: Option<f64>,
    pub points: Vec<PointRow>,
}

impl DesignFile {
    pub fn from_design(design: &Design, names: &[&str]) -> Self {
        DesignFile {
            factors: names.iter().map(|s| s.to_string()).collect(),
            note: None,
            log_det: None,
            points: design
                .points()
                .iter()
                .map(|p| PointRow {
                    setting: p.setting.clone(),
                    weight: p.weight,
                })
                .collect(),
        }
    }

    /// Builds the design after checking the factor names against `space`.
    pub fn to_design(&self, space: &FactorSpace) -> Result<Design, CliError> {
        check_names(&self.factors, space)?;
        let points = self
            .points
            .iter()
            .map(|r| DesignPoint::new(r.setting.clone(), r.weight))
            .collect();
        Ok(Design::new(points)?)
    }
}

fn check_names<S: AsRef<str>>(names: &[S], space: &FactorSpace) -> Result<(), CliError> {
    let expected = space.names();
    if names.len() != expected.len() || names.iter().zip(&expected).any(|(a, b)| a.as_ref() != *b) {
        return Err(CliError::Config(format!(
            "design factors {:?} do not match the problem's {:?}",
            names.iter().map(AsRef::as_ref).collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

pub fn design_to_csv(design: &Design, names: &[&str]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = names.to_vec();
    header.push("weight");
    w.write_record(&header).map_err(csv_err)?;
    for p in design.points() {
        let mut row: Vec<String> = p.setting.iter().map(|v| v.to_string()).collect();
        row.push(p.weight.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

pub fn design_from_csv(text: &str, space: &FactorSpace) -> Result<Design, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let Some((last, names)) = header.split_last() else {
        return Err(CliError::Config("empty design table".into()));
    };
    if last != "weight" {
        return Err(CliError::Config("the last design column must be `weight`".into()));
    }
    check_names(names, space)?;
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let values = rec
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("design row {}: `{v}` is not a number", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (w, s) = values.split_last().expect("header checked the width");
        points.push(DesignPoint::new(s.to_vec(), *w));
    }
    Ok(Design::new(points)?)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

/// Loads a design from `.json` or `.csv`.
pub fn load_design(path: &Path, space: &FactorSpace) -> Result<Design, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let design = if is_csv {
        design_from_csv(&text, space)
    } else {
        serde_json::from_str::<DesignFile>(&text)
            .map_err(|e| CliError::Config(format!("invalid design file: {e}")))
            .and_then(|f| f.to_design(space))
    };
    design.map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Writes `<path>.json` and `<path>.csv` (the extension of `path` is
/// replaced).
pub fn write_design(path: &Path, file: &DesignFile, design: &Design, names: &[&str]) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(file).map_err(|e| CliError::Io(e.to_string()))?;
    write_text(&path.with_extension("json"), &(json + "\n"))?;
    write_text(&path.with_extension("csv"), &design_to_csv(design, names)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
