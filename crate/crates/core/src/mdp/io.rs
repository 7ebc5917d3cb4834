//! Plain-text MDP fixtures.
//!
//! ```text
//! tabular-mdp 1
//! <states> <actions> <admissible pairs> <terminal states>
//! terminal <id> <id> ...
//! T <s> <a> <p_0> ... <p_{S-1}>      one line per non-terminal admissible pair
//! R <s> <a> <r_0> ... <r_{S-1}>      same pairs, same order
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Terminal states get
//! their absorbing self-loops on load and are not listed in the T/R rows.

use std::fmt::Write as _;

use super::{MdpError, TabularMdp};
use crate::scalar::Real;

const MAGIC: &str = "tabular-mdp 1";

pub fn write_text<T: Real>(mdp: &TabularMdp<T>) -> String {
    let rows: Vec<(usize, usize)> =
        mdp.admissible().iter().copied().filter(|&(s, _)| !mdp.is_terminal(s)).collect();
    let terminal: Vec<usize> = mdp.terminal_states().collect();
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "{} {} {} {}", mdp.state_count(), mdp.action_count(), rows.len(), terminal.len()).unwrap();
    write!(out, "terminal").unwrap();
    for s in &terminal {
        write!(out, " {s}").unwrap();
    }
    out.push('\n');
    for (tag, row_of) in [("T", 0), ("R", 1)] {
        for &(s, a) in &rows {
            let row = if row_of == 0 { mdp.transition_row(s, a) } else { mdp.reward_row(s, a) };
            write!(out, "{tag} {s} {a}").unwrap();
            for v in row.unwrap() {
                write!(out, " {:?}", v.as_f64()).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn read_text<T: Real>(text: &str) -> Result<TabularMdp<T>, MdpError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let err = |line: usize, msg: &str| MdpError::Parse { line, msg: msg.to_string() };
    let parse_usize = |line: usize, tok: &str| tok.parse::<usize>().map_err(|_| err(line, "expected an integer"));

    let (line, magic) = lines.next().ok_or_else(|| err(0, "empty input"))?;
    if magic != MAGIC {
        return Err(err(line, "missing 'tabular-mdp 1' header"));
    }
    let (line, counts) = lines.next().ok_or_else(|| err(line, "missing counts"))?;
    let counts: Vec<usize> = counts.split_whitespace().map(|t| parse_usize(line, t)).collect::<Result<_, _>>()?;
    let [states, actions, pairs, terminals] = counts[..] else {
        return Err(err(line, "expected four counts"));
    };
    let (line, term) = lines.next().ok_or_else(|| err(line, "missing terminal line"))?;
    let mut toks = term.split_whitespace();
    if toks.next() != Some("terminal") {
        return Err(err(line, "expected 'terminal'"));
    }
    let terminal: Vec<usize> = toks.map(|t| parse_usize(line, t)).collect::<Result<_, _>>()?;
    if terminal.len() != terminals {
        return Err(err(line, "terminal count mismatch"));
    }

    let mut read_rows = |tag: &str| -> Result<Vec<(usize, usize, Vec<T>)>, MdpError> {
        (0..pairs)
            .map(|_| {
                let (line, row) = lines.next().ok_or_else(|| err(0, "unexpected end of input"))?;
                let mut toks = row.split_whitespace();
                if toks.next() != Some(tag) {
                    return Err(err(line, &format!("expected a {tag} row")));
                }
                let s = parse_usize(line, toks.next().unwrap_or(""))?;
                let a = parse_usize(line, toks.next().unwrap_or(""))?;
                let vals = toks
                    .map(|t| t.parse::<f64>().map(T::lit).map_err(|_| err(line, "expected a number")))
                    .collect::<Result<Vec<T>, _>>()?;
                Ok((s, a, vals))
            })
            .collect()
    };
    let t_rows = read_rows("T")?;
    let r_rows = read_rows("R")?;

    let mut builder = TabularMdp::builder(states, actions);
    for ((s, a, t), (rs, ra, r)) in t_rows.into_iter().zip(r_rows) {
        if (s, a) != (rs, ra) {
            return Err(err(0, "T and R rows list different pairs"));
        }
        builder = builder.pair(s, a, t, r);
    }
    for s in terminal {
        builder = builder.terminal(s);
    }
    builder.build()
}
