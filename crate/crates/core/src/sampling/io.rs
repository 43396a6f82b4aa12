//! Logit files: a `vocab_size,<V>` header row, then one row of `V`
//! comma-separated logits per sampling step.

use std::path::Path;

use super::logits::LogitVector;
use super::{Result, SamplingError};

pub fn read_logit_csv(path: &Path) -> Result<Vec<LogitVector>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SamplingError::Format(format!("{}: {e}", path.display())))?;
    parse_logit_csv(&text)
}

pub fn parse_logit_csv(text: &str) -> Result<Vec<LogitVector>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();

    let header = rows
        .next()
        .ok_or_else(|| SamplingError::Format("empty file".into()))?
        .map_err(|e| SamplingError::Format(e.to_string()))?;
    if header.len() != 2 || &header[0] != "vocab_size" {
        return Err(SamplingError::Format("first row must be `vocab_size,<V>`".into()));
    }
    let vocab: usize = header[1]
        .parse()
        .ok()
        .filter(|&v: &usize| v > 0)
        .ok_or_else(|| SamplingError::Format(format!("bad vocab_size '{}'", &header[1])))?;

    let mut steps = Vec::new();
    for (line, row) in rows.enumerate() {
        let row = row.map_err(|e| SamplingError::Format(e.to_string()))?;
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != vocab {
            return Err(SamplingError::Format(format!(
                "row {}: expected {vocab} logits, found {}",
                line + 2,
                row.len()
            )));
        }
        let values = row
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| SamplingError::Format(format!("row {}: {e}", line + 2)))?;
        steps.push(LogitVector::new(values)?);
    }
    if steps.is_empty() {
        return Err(SamplingError::Format("no logit rows".into()));
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows() {
        let steps = parse_logit_csv("vocab_size,3\n1,2,3\n-0.5, 0.0, 2.25\n").unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[1].values(), &[-0.5, 0.0, 2.25]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_logit_csv("").is_err());
        assert!(parse_logit_csv("vocab,3\n1,2,3\n").is_err());
        assert!(parse_logit_csv("vocab_size,3\n1,2\n").is_err());
        assert!(parse_logit_csv("vocab_size,2\n1,x\n").is_err());
        assert!(parse_logit_csv("vocab_size,2\n1,NaN\n").is_err());
        assert!(parse_logit_csv("vocab_size,2\n").is_err());
    }
}
