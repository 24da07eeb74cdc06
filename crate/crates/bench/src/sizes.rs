//! Plain-text problem lists and token ranges.

use std::path::Path;

use anyhow::{bail, Context, Result};

/// GEMM shapes bundled with the crate: a spread of square, skinny and wide
/// problems in the style of public GEMM benchmark suites. Synthetic stand-ins,
/// not a copy of any published list.
pub const BUNDLED_SINGLE: &str = include_str!("../data/gemm_sizes.txt");

/// Chain shapes bundled with the crate.
pub const BUNDLED_CHAIN: &str = include_str!("../data/chain_sizes.txt");

/// One `M N K` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GemmShape {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

/// Parses `M N K` per line; `#` starts a comment, blank lines are skipped.
pub fn parse_sizes(text: &str) -> Result<Vec<GemmShape>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().with_context(|| format!("line {lineno}: `{t}` is not a count")))
            .collect::<Result<Vec<_>>>()?;
        let [m, n, k] = nums[..] else {
            bail!("line {lineno}: expected `M N K`, found {} fields", nums.len());
        };
        if m == 0 || n == 0 || k == 0 {
            bail!("line {lineno}: dimensions must be positive");
        }
        out.push(GemmShape { m, n, k });
    }
    if out.is_empty() {
        bail!("size list contains no problems");
    }
    Ok(out)
}

pub fn load_sizes(path: Option<&Path>, bundled: &str) -> Result<Vec<GemmShape>> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_sizes(&text).with_context(|| format!("in {}", p.display()))
        }
        None => parse_sizes(bundled),
    }
}

/// Parses `start..end..step` (inclusive end), `start..end` (step 1) or a single count.
pub fn parse_token_range(spec: &str) -> Result<Vec<usize>> {
    let parts = spec
        .split("..")
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad token range `{spec}`")))
        .collect::<Result<Vec<_>>>()?;
    let (start, end, step) = match parts[..] {
        [n] => (n, n, 1),
        [a, b] => (a, b, 1),
        [a, b, s] => (a, b, s),
        _ => bail!("bad token range `{spec}`: expected start..end..step"),
    };
    if start == 0 || step == 0 || end < start {
        bail!("bad token range `{spec}`: need 1 <= start <= end and step >= 1");
    }
    Ok((start..=end).step_by(step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let s = parse_sizes("# header\n64 64 64\n\n  128 1 256  # skinny\n").unwrap();
        assert_eq!(s, vec![GemmShape { m: 64, n: 64, k: 64 }, GemmShape { m: 128, n: 1, k: 256 }]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_sizes("1 2 3\n4 5\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 2"), "{e:#}");
        let e = parse_sizes("1 2 3\n\n4 x 6\n").unwrap_err();
        assert!(format!("{e:#}").contains("line 3"), "{e:#}");
        assert!(parse_sizes("0 1 1").is_err());
        assert!(parse_sizes("# nothing").is_err());
    }

    #[test]
    fn bundled_files_parse() {
        assert!(parse_sizes(BUNDLED_SINGLE).unwrap().len() >= 20);
        assert!(!parse_sizes(BUNDLED_CHAIN).unwrap().is_empty());
    }

    #[test]
    fn token_ranges() {
        assert_eq!(parse_token_range("16..64..16").unwrap(), vec![16, 32, 48, 64]);
        assert_eq!(parse_token_range("16..512..16").unwrap().len(), 32);
        assert_eq!(parse_token_range("3..5").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_token_range("16").unwrap(), vec![16]);
        assert!(parse_token_range("0..4").is_err());
        assert!(parse_token_range("8..4").is_err());
        assert!(parse_token_range("a..b").is_err());
        assert!(parse_token_range("1..2..3..4").is_err());
    }
}
