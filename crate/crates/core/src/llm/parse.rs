use crate::error::ParseError;
use crate::structure::{num_pairs, TNStructure};

const MARKER: &str = "RANKS";

/// Bracketed contents of a `RANKS: [ ... ]` line, if the line has that form.
fn solution_payload(line: &str) -> Option<&str> {
    let rest = line.trim().strip_prefix(MARKER)?;
    let rest = rest.trim_start().strip_prefix(':')?.trim();
    rest.strip_prefix('[')?.strip_suffix(']')
}

/// Extracts the proposed structure from the last `RANKS: [...]` line of a
/// reply, along with everything before that line as the model's reasoning.
///
/// Ranks outside `[1, r_max]` are rejected rather than clipped.
pub fn parse_solution(reply: &str, order: usize, r_max: usize) -> Result<(TNStructure, String), ParseError> {
    let lines: Vec<&str> = reply.lines().collect();
    let (at, payload) = lines
        .iter()
        .enumerate()
        .rev()
        .find_map(|(i, line)| solution_payload(line).map(|p| (i, p)))
        .ok_or(ParseError::NoSolutionLine)?;

    let values = if payload.trim().is_empty() {
        Vec::new()
    } else {
        payload
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<i64>()
                    .map_err(|_| ParseError::NotInteger(tok.to_owned()))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let expected = num_pairs(order);
    if values.len() != expected {
        return Err(ParseError::Arity {
            expected,
            found: values.len(),
        });
    }
    if let Some(&bad) = values.iter().find(|&&v| v < 1 || v > r_max as i64) {
        return Err(ParseError::OutOfBounds {
            value: bad,
            min: 1,
            max: r_max,
        });
    }
    let ranks = values.into_iter().map(|v| v as usize).collect();
    let structure = TNStructure::new(order, ranks).expect("validated ranks");
    let reasoning = lines[..at].join("\n").trim().to_owned();
    Ok((structure, reasoning))
}
