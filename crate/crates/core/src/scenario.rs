//! Flat key-value scenario files.
//!
//! ```text
//! # MIMO-(6,6) with one 2-antenna interferer
//! nr = 6
//! sigma2 = 1            # or sigma2_db
//! user.0.nt = 6
//! user.0.p_db = 10      # or p_lin
//! user.1.nt = 2
//! user.1.p_lin = 10
//! ```
//!
//! User 0 is the desired link; indices must be contiguous from 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::capacity::db_to_linear;
use crate::covariance::{NetworkScenario, User};
use crate::error::{Error, Result};

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

#[derive(Default)]
struct UserFields {
    nt: Option<(usize, usize)>,
    power: Option<(usize, f64)>,
}

fn number(line: usize, key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => parse_err(line, format!("`{key}` needs a finite number, got `{v}`")),
    }
}

pub fn parse_scenario(text: &str) -> Result<NetworkScenario> {
    let mut nr: Option<usize> = None;
    let mut sigma2: Option<f64> = None;
    let mut users: BTreeMap<usize, UserFields> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return parse_err(line, format!("expected `key = value`, got `{body}`"));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "nr" => {
                if nr.is_some() {
                    return parse_err(line, "duplicate `nr`");
                }
                nr = Some(value.parse().or_else(|_| parse_err(line, format!("`nr` needs a positive integer, got `{value}`")))?);
            }
            "sigma2" | "sigma2_db" => {
                if sigma2.is_some() {
                    return parse_err(line, "noise variance given twice");
                }
                let x = number(line, key, value)?;
                sigma2 = Some(if key == "sigma2_db" { db_to_linear(x) } else { x });
            }
            _ => {
                let parts: Vec<&str> = key.split('.').collect();
                let ["user", k, field] = parts.as_slice() else {
                    return parse_err(line, format!("unknown key `{key}`"));
                };
                let k: usize = k.parse().or_else(|_| parse_err(line, format!("bad user index in `{key}`")))?;
                let u = users.entry(k).or_default();
                match *field {
                    "nt" => {
                        if u.nt.is_some() {
                            return parse_err(line, format!("duplicate `{key}`"));
                        }
                        let nt = value
                            .parse()
                            .or_else(|_| parse_err(line, format!("`{key}` needs a positive integer, got `{value}`")))?;
                        u.nt = Some((line, nt));
                    }
                    "p_db" | "p_lin" => {
                        if u.power.is_some() {
                            return parse_err(line, format!("power of user {k} given twice"));
                        }
                        let x = number(line, key, value)?;
                        u.power = Some((line, if *field == "p_db" { db_to_linear(x) } else { x }));
                    }
                    _ => return parse_err(line, format!("unknown user field `{field}`")),
                }
            }
        }
    }
    let last = text.lines().count().max(1);
    let Some(nr) = nr else {
        return parse_err(last, "missing `nr`");
    };
    let mut list = Vec::with_capacity(users.len());
    for (i, (k, u)) in users.into_iter().enumerate() {
        if k != i {
            return parse_err(last, format!("user indices must be contiguous from 0; user {i} is missing"));
        }
        let Some((nt_line, nt)) = u.nt else {
            return parse_err(last, format!("user {k} has no `nt`"));
        };
        let Some((p_line, power)) = u.power else {
            return parse_err(last, format!("user {k} has no power (`p_db` or `p_lin`)"));
        };
        if nt == 0 {
            return parse_err(nt_line, format!("user {k} needs at least one antenna"));
        }
        if !(power > 0.0) {
            return parse_err(p_line, format!("user {k} power must be positive"));
        }
        list.push(User { nt, power });
    }
    if list.is_empty() {
        return parse_err(last, "no users; user 0 is the desired link");
    }
    NetworkScenario::new(nr, list, sigma2.unwrap_or(1.0)).map_err(|e| Error::Parse {
        line: last,
        msg: e.to_string(),
    })
}

pub fn load_scenario(path: &Path) -> Result<NetworkScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Canonical text form, linear powers; parses back to the same scenario.
pub fn scenario_to_text(s: &NetworkScenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nr = {}", s.nr);
    let _ = writeln!(out, "sigma2 = {:e}", s.sigma2);
    for (k, u) in s.users.iter().enumerate() {
        let _ = writeln!(out, "user.{k}.nt = {}", u.nt);
        let _ = writeln!(out, "user.{k}.p_lin = {:e}", u.power);
    }
    out
}

/// Short SHA-256 digest of arbitrary configuration text.
pub fn text_digest(text: &str) -> String {
    let hash = Sha256::digest(text.as_bytes());
    hash.iter().take(8).fold(String::from("sha256:"), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn scenario_digest(s: &NetworkScenario) -> String {
    text_digest(&scenario_to_text(s))
}
