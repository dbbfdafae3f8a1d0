//! Flat `key = value` experiment files.
//!
//! Each key is a long flag of the chosen subcommand. The pairs are spliced
//! into the argument list before the command-line flags, so flags given on
//! the command line win.

use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {}: expected key = value, got '{line}'",
                lineno + 1
            )));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!(
                "config line {}: invalid key",
                lineno + 1
            )));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

pub fn load_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Path given by `--config PATH` or `--config=PATH`, if any.
fn config_path(args: &[String]) -> Result<Option<String>> {
    let mut found = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            match it.next() {
                Some(p) => found = Some(p.clone()),
                None => return Err(Error::Config("--config needs a path".into())),
            }
        } else if let Some(p) = a.strip_prefix("--config=") {
            found = Some(p.to_string());
        }
    }
    Ok(found)
}

/// Inserts the file's flags right after the subcommand token.
pub fn splice_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let pairs = load_config(Path::new(&path))?;
    let at = args.len().min(2);
    let mut out = args[..at].to_vec();
    out.extend(pairs.into_iter().map(|(k, v)| format!("--{k}={v}")));
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let pairs = parse_config("# header\nbase = 2\n\nk_max=8  # inline\n").unwrap();
        assert_eq!(
            pairs,
            vec![("base".into(), "2".into()), ("k-max".into(), "8".into())]
        );
        assert!(parse_config("oops").is_err());
        assert!(parse_config("config = x").is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(&path, "seed = 3\n").unwrap();
        let args: Vec<String> = [
            "prog",
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "9",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let out = splice_config(args).unwrap();
        assert_eq!(out[2], "--seed=3");
        assert_eq!(out.last().unwrap(), "9");
    }
}
