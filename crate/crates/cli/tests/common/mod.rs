//! Shared helpers for the CLI test targets: binary invocation, scratch
//! paths and a small XML well-formedness checker.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

/// Runs the built binary with the given arguments and environment overrides.
pub fn run_cli(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coupling-lab"));
    cmd.args(args);
    cmd.env_remove("COUPLING_LAB_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal exit")
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Unique scratch file path under the target-local temp dir.
pub fn scratch_path(label: &str) -> PathBuf {
    let id = SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!(
        "coupling-lab-test-{}-{id}-{label}",
        std::process::id()
    ))
}

/// Minimal XML 1.0 well-formedness check: balanced tags, quoted attributes,
/// no bare `<` or `&` in character data. Enough to catch malformed output
/// without an XML dependency.
pub fn check_well_formed_xml(text: &str) -> Result<(), String> {
    let bytes = text.as_bytes();
    let mut stack: Vec<String> = Vec::new();
    let mut i = 0;
    let mut seen_element = false;

    while i < bytes.len() {
        match bytes[i] {
            b'<' => {
                if text[i..].starts_with("<?") {
                    let end = text[i..]
                        .find("?>")
                        .ok_or_else(|| "unterminated processing instruction".to_string())?;
                    i += end + 2;
                } else if text[i..].starts_with("<!--") {
                    let end = text[i..]
                        .find("-->")
                        .ok_or_else(|| "unterminated comment".to_string())?;
                    i += end + 3;
                } else if text[i..].starts_with("</") {
                    let end = text[i..]
                        .find('>')
                        .ok_or_else(|| "unterminated closing tag".to_string())?;
                    let name = text[i + 2..i + end].trim();
                    let open = stack
                        .pop()
                        .ok_or_else(|| format!("closing tag </{name}> with empty stack"))?;
                    if open != name {
                        return Err(format!("mismatched tags: <{open}> closed by </{name}>"));
                    }
                    i += end + 1;
                } else {
                    // Opening or self-closing tag; respect quoted attributes.
                    let mut j = i + 1;
                    let mut quote: Option<u8> = None;
                    let mut tag_end = None;
                    while j < bytes.len() {
                        match (quote, bytes[j]) {
                            (Some(q), b) if b == q => quote = None,
                            (Some(_), _) => {}
                            (None, b'"') | (None, b'\'') => quote = Some(bytes[j]),
                            (None, b'>') => {
                                tag_end = Some(j);
                                break;
                            }
                            (None, b'<') => {
                                return Err("unexpected '<' inside a tag".into());
                            }
                            _ => {}
                        }
                        j += 1;
                    }
                    let tag_end = tag_end.ok_or_else(|| "unterminated opening tag".to_string())?;
                    if quote.is_some() {
                        return Err("unterminated attribute quote".into());
                    }
                    let body = &text[i + 1..tag_end];
                    let self_closing = body.ends_with('/');
                    let name = body
                        .trim_end_matches('/')
                        .split_whitespace()
                        .next()
                        .ok_or_else(|| "empty tag name".to_string())?
                        .to_string();
                    if !self_closing {
                        stack.push(name);
                    }
                    seen_element = true;
                    i = tag_end + 1;
                }
            }
            b'&' => {
                let rest = &text[i..];
                let semi = rest
                    .find(';')
                    .ok_or_else(|| "bare '&' in character data".to_string())?;
                let entity = &rest[1..semi];
                let valid = matches!(entity, "amp" | "lt" | "gt" | "quot" | "apos")
                    || entity.starts_with('#');
                if !valid || semi > 10 {
                    return Err(format!("invalid entity '&{entity};'"));
                }
                i += semi + 1;
            }
            b'>' => return Err("bare '>' outside a tag".into()),
            _ => i += 1,
        }
    }

    if !stack.is_empty() {
        return Err(format!("unclosed tags: {stack:?}"));
    }
    if !seen_element {
        return Err("no root element".into());
    }
    Ok(())
}
