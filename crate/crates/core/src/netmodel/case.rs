//! Case-file ingestion.
//!
//! Two input forms are accepted: MATPOWER version 2 case files (the `mpc.baseMVA`,
//! `mpc.bus`, `mpc.gen` and `mpc.branch` matrices; everything else is skipped)
//! and a JSON serialization of [`RawCase`]. Values are stored normalized: powers
//! and shunts in p.u. on `base_mva`, angles in radians.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusType {
    Slack,
    #[serde(rename = "pv")]
    PV,
    #[serde(rename = "pq")]
    PQ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBus {
    pub id: u64,
    #[serde(rename = "type")]
    pub kind: BusType,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub vm: f64,
    pub va: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGenerator {
    pub bus: u64,
    pub pg: f64,
    pub qg: f64,
    pub vset: f64,
    #[serde(default = "in_service")]
    pub status: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBranch {
    pub from: u64,
    pub to: u64,
    pub r: f64,
    pub x: f64,
    pub b_charge: f64,
    #[serde(default = "unit_tap")]
    pub tap: f64,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "in_service")]
    pub status: u8,
}

impl RawBranch {
    pub fn in_service(&self) -> bool {
        self.status != 0
    }
}

fn in_service() -> u8 {
    1
}

fn unit_tap() -> f64 {
    1.0
}

/// A validated network case in per-unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCase {
    #[serde(rename = "baseMVA")]
    pub base_mva: f64,
    pub buses: Vec<RawBus>,
    pub generators: Vec<RawGenerator>,
    pub branches: Vec<RawBranch>,
}

impl RawCase {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(Error::Validation(format!(
                "baseMVA must be positive, got {}",
                self.base_mva
            )));
        }
        let mut ids = HashSet::with_capacity(self.buses.len());
        for bus in &self.buses {
            if !ids.insert(bus.id) {
                return Err(Error::Validation(format!("duplicate bus id {}", bus.id)));
            }
        }
        for (idx, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return Err(Error::UnknownBus(end));
                }
            }
            if br.in_service() && !(br.tap > 0.0) {
                return Err(Error::Validation(format!(
                    "branch {idx} ({}-{}) has non-positive tap {}",
                    br.from, br.to, br.tap
                )));
            }
        }
        for gen in &self.generators {
            if !ids.contains(&gen.bus) {
                return Err(Error::UnknownBus(gen.bus));
            }
        }
        if self
            .buses
            .iter()
            .filter(|b| b.kind == BusType::Slack)
            .count()
            != 1
        {
            return Err(Error::Validation("exactly one slack bus is required".into()));
        }
        Ok(())
    }

    pub fn bus_position(&self, id: u64) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses either a MATPOWER case or the JSON form, dispatching on the first
/// non-blank character.
pub fn parse_case(text: &str) -> Result<RawCase> {
    let case = if text.trim_start().starts_with('{') {
        serde_json::from_str::<RawCase>(text)?
    } else {
        parse_matpower(text)?
    };
    case.validate()?;
    Ok(case)
}

struct Row {
    line: usize,
    values: Vec<f64>,
}

enum Section {
    None,
    Matrix { name: String, rows: Vec<Row> },
    Skip { close: char },
}

pub fn parse_matpower(text: &str) -> Result<RawCase> {
    let mut base_mva: Option<f64> = None;
    let mut bus_rows = None;
    let mut gen_rows = None;
    let mut branch_rows = None;
    let mut section = Section::None;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match &mut section {
            Section::Skip { close } => {
                if line.contains(*close) {
                    section = Section::None;
                }
                continue;
            }
            Section::Matrix { name, rows } => {
                let (body, closed) = match line.find(']') {
                    Some(pos) => (&line[..pos], true),
                    None => (line, false),
                };
                for chunk in body.split(';') {
                    let values = parse_numbers(chunk, line_no)?;
                    if !values.is_empty() {
                        rows.push(Row { line: line_no, values });
                    }
                }
                if closed {
                    let rows = std::mem::take(rows);
                    match name.as_str() {
                        "bus" => bus_rows = Some(rows),
                        "gen" => gen_rows = Some(rows),
                        "branch" => branch_rows = Some(rows),
                        _ => {}
                    }
                    section = Section::None;
                }
                continue;
            }
            Section::None => {}
        }

        let Some(rest) = line.strip_prefix("mpc.") else {
            continue;
        };
        let Some((name, value)) = rest.split_once('=') else {
            continue;
        };
        let name = name.trim();
        let value = value.trim();
        if let Some(body) = value.strip_prefix('[') {
            let (body, closed) = match body.find(']') {
                Some(pos) => (&body[..pos], true),
                None => (body, false),
            };
            let mut rows = Vec::new();
            for chunk in body.split(';') {
                let values = parse_numbers(chunk, line_no)?;
                if !values.is_empty() {
                    rows.push(Row { line: line_no, values });
                }
            }
            if closed {
                match name {
                    "bus" => bus_rows = Some(rows),
                    "gen" => gen_rows = Some(rows),
                    "branch" => branch_rows = Some(rows),
                    _ => {}
                }
            } else {
                section = Section::Matrix {
                    name: name.to_string(),
                    rows,
                };
            }
        } else if value.starts_with('{') {
            if !value.contains('}') {
                section = Section::Skip { close: '}' };
            }
        } else if name == "baseMVA" {
            let v = value.trim_end_matches(';').trim();
            base_mva = Some(v.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid baseMVA value '{v}'"),
            })?);
        }
    }

    let base_mva = base_mva.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing mpc.baseMVA".into(),
    })?;
    let missing = |what: &str| Error::Parse {
        line: 0,
        message: format!("missing mpc.{what} matrix"),
    };
    let bus_rows = bus_rows.ok_or_else(|| missing("bus"))?;
    let gen_rows = gen_rows.ok_or_else(|| missing("gen"))?;
    let branch_rows = branch_rows.ok_or_else(|| missing("branch"))?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        require_columns(row, 9, "bus")?;
        let v = &row.values;
        let kind = match v[1] as i64 {
            1 => BusType::PQ,
            2 => BusType::PV,
            3 => BusType::Slack,
            other => {
                return Err(Error::Parse {
                    line: row.line,
                    message: format!("unsupported bus type {other}"),
                })
            }
        };
        buses.push(RawBus {
            id: as_id(v[0], row.line)?,
            kind,
            pd: v[2] / base_mva,
            qd: v[3] / base_mva,
            gs: v[4] / base_mva,
            bs: v[5] / base_mva,
            vm: v[7],
            va: v[8].to_radians(),
        });
    }

    let mut generators = Vec::with_capacity(gen_rows.len());
    for row in &gen_rows {
        require_columns(row, 8, "gen")?;
        let v = &row.values;
        generators.push(RawGenerator {
            bus: as_id(v[0], row.line)?,
            pg: v[1] / base_mva,
            qg: v[2] / base_mva,
            vset: v[5],
            status: u8::from(v[7] > 0.0),
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for row in &branch_rows {
        require_columns(row, 11, "branch")?;
        let v = &row.values;
        branches.push(RawBranch {
            from: as_id(v[0], row.line)?,
            to: as_id(v[1], row.line)?,
            r: v[2],
            x: v[3],
            b_charge: v[4],
            tap: if v[8] == 0.0 { 1.0 } else { v[8] },
            shift: v[9].to_radians(),
            status: u8::from(v[10] != 0.0),
        });
    }

    Ok(RawCase {
        base_mva,
        buses,
        generators,
        branches,
    })
}

fn parse_numbers(chunk: &str, line: usize) -> Result<Vec<f64>> {
    chunk
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("malformed numeric field '{tok}'"),
            })
        })
        .collect()
}

fn require_columns(row: &Row, n: usize, what: &str) -> Result<()> {
    if row.values.len() < n {
        return Err(Error::Parse {
            line: row.line,
            message: format!(
                "{what} row has {} columns, expected at least {n}",
                row.values.len()
            ),
        });
    }
    Ok(())
}

fn as_id(v: f64, line: usize) -> Result<u64> {
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("invalid bus id {v}"),
        });
    }
    Ok(v as u64)
}
