//! `--config PATH`: key=value lines spliced into the argument list right
//! after the subcommand, so flags given on the command line take precedence.

use std::fs;

pub fn expand(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let (path, consumed) = match argv[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => (
            argv.get(pos + 1).cloned().ok_or("--config needs a path")?,
            2,
        ),
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", n + 1))?;
        let key = key.trim().replace('_', "-");
        if key == "config" {
            return Err(format!("{path}:{}: nested config files are not supported", n + 1));
        }
        extra.push(format!("--{key}={}", value.trim()));
    }
    let mut rest: Vec<String> = argv.clone();
    rest.drain(pos..pos + consumed);
    // the subcommand is the first argument that is not a flag or its value
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|i| i + 2)
        .unwrap_or(rest.len());
    let mut out = rest[..sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&rest[sub..]);
    Ok(out)
}
