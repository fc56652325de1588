//! Reader and writer for the INP-subset network format.
//!
//! ```text
//! [JUNCTIONS]   id
//! [RESERVOIRS]  id source_mg_per_l
//! [TANKS]       id [kb_per_h]
//! [PIPES]       id from to length_m diameter_m kb kw kf
//! [PUMPS]       id from to
//! [VALVES]      id from to
//! ```
//!
//! Tokens are whitespace separated; `;` starts a comment that runs to the end
//! of the line. Section names are case-insensitive. `[END]` stops parsing.

use std::fmt::Write as _;

use super::{Connector, Junction, Pipe, Reservoir, Tank, WaterNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Junctions,
    Reservoirs,
    Tanks,
    Pipes,
    Pumps,
    Valves,
}

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        msg: msg.into(),
    }
}

fn number(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| syntax(line, format!("{what}: '{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("{what}: '{tok}' is not finite")));
    }
    Ok(v)
}

fn expect_len(toks: &[&str], min: usize, max: usize, line: usize, section: &str) -> Result<()> {
    if toks.len() < min || toks.len() > max {
        let want = if min == max {
            format!("{min}")
        } else {
            format!("{min}-{max}")
        };
        return Err(syntax(
            line,
            format!("{section} entry needs {want} fields, found {}", toks.len()),
        ));
    }
    Ok(())
}

/// Parse a network description.
pub fn parse_network(text: &str) -> Result<WaterNetwork> {
    let mut section = Section::None;
    let mut junctions = Vec::new();
    let mut reservoirs = Vec::new();
    let mut tanks = Vec::new();
    let mut pipes = Vec::new();
    let mut pumps = Vec::new();
    let mut valves = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split(';').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            let name = content
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, "unterminated section header"))?[1..]
                .trim()
                .to_ascii_uppercase();
            section = match name.as_str() {
                "JUNCTIONS" => Section::Junctions,
                "RESERVOIRS" => Section::Reservoirs,
                "TANKS" => Section::Tanks,
                "PIPES" => Section::Pipes,
                "PUMPS" => Section::Pumps,
                "VALVES" => Section::Valves,
                "END" => break,
                other => return Err(syntax(line, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match section {
            Section::None => return Err(syntax(line, "data outside of any section")),
            Section::Junctions => {
                expect_len(&toks, 1, 1, line, "junction")?;
                junctions.push(Junction {
                    id: toks[0].to_string(),
                });
            }
            Section::Reservoirs => {
                expect_len(&toks, 2, 2, line, "reservoir")?;
                reservoirs.push(Reservoir {
                    id: toks[0].to_string(),
                    source: number(toks[1], line, "source")?,
                });
            }
            Section::Tanks => {
                expect_len(&toks, 1, 2, line, "tank")?;
                let kb = match toks.get(1) {
                    Some(t) => number(t, line, "kb")?,
                    None => 0.0,
                };
                tanks.push(Tank {
                    id: toks[0].to_string(),
                    kb,
                });
            }
            Section::Pipes => {
                expect_len(&toks, 8, 8, line, "pipe")?;
                pipes.push(Pipe {
                    id: toks[0].to_string(),
                    from: toks[1].to_string(),
                    to: toks[2].to_string(),
                    length_m: number(toks[3], line, "length")?,
                    diameter_m: number(toks[4], line, "diameter")?,
                    kb: number(toks[5], line, "kb")?,
                    kw: number(toks[6], line, "kw")?,
                    kf: number(toks[7], line, "kf")?,
                });
            }
            Section::Pumps | Section::Valves => {
                expect_len(&toks, 3, 3, line, "pump/valve")?;
                let c = Connector {
                    id: toks[0].to_string(),
                    from: toks[1].to_string(),
                    to: toks[2].to_string(),
                };
                if section == Section::Pumps {
                    pumps.push(c);
                } else {
                    valves.push(c);
                }
            }
        }
    }

    WaterNetwork::new(junctions, reservoirs, tanks, pipes, pumps, valves)
}

/// Write a network in the same grammar [`parse_network`] reads.
pub fn serialize_network(net: &WaterNetwork) -> String {
    let mut s = String::new();
    s.push_str("[JUNCTIONS]\n");
    for j in &net.junctions {
        let _ = writeln!(s, "{}", j.id);
    }
    s.push_str("\n[RESERVOIRS]\n");
    for r in &net.reservoirs {
        let _ = writeln!(s, "{} {}", r.id, r.source);
    }
    s.push_str("\n[TANKS]\n");
    for t in &net.tanks {
        let _ = writeln!(s, "{} {}", t.id, t.kb);
    }
    s.push_str("\n[PIPES]\n");
    for p in &net.pipes {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {} {}",
            p.id, p.from, p.to, p.length_m, p.diameter_m, p.kb, p.kw, p.kf
        );
    }
    for (name, items) in [("PUMPS", &net.pumps), ("VALVES", &net.valves)] {
        let _ = writeln!(s, "\n[{name}]");
        for c in items.iter() {
            let _ = writeln!(s, "{} {} {}", c.id, c.from, c.to);
        }
    }
    s.push_str("\n[END]\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_NODE: &str = "
[JUNCTIONS]
J2
[RESERVOIRS]
R1 0.8   ; source
[TANKS]
TK3 -0.1
[PIPES]
;id from to L D kb kw kf
P23 J2 TK3 100 0.1 -0.5 0 0
[PUMPS]
M12 R1 J2
";

    #[test]
    fn parses_three_node() {
        let net = parse_network(THREE_NODE).unwrap();
        assert_eq!(net.counts().as_array(), [1, 1, 1, 1, 1, 0]);
        assert_eq!(net.tanks[0].kb, -0.1);
        assert_eq!(net.pipes[0].diameter_m, 0.1);
    }

    #[test]
    fn empty_document_has_no_nodes() {
        let err = parse_network("; nothing here\n").unwrap_err();
        assert!(err.to_string().contains("no nodes defined"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_network("[JUNCTIONS]\nJ1\n[PIPES]\nP1 J1 J2 10\n").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e:?}"),
        }
        let err = parse_network("J1\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }));
        let err = parse_network("[RESERVOIRS]\nR1 abc\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }));
        let err = parse_network("[CURVES]\n").unwrap_err();
        assert!(err.to_string().contains("unknown section"));
    }

    #[test]
    fn validation_errors() {
        let dangling = "[JUNCTIONS]\nJ1\n[PIPES]\nP1 J1 J9 10 0.1 0 0 0\n";
        assert!(parse_network(dangling)
            .unwrap_err()
            .to_string()
            .contains("unknown node 'J9'"));
        let dup = "[JUNCTIONS]\nJ1\nJ1\n";
        assert!(parse_network(dup)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        let short = "[JUNCTIONS]\nJ1\nJ2\n[PIPES]\nP1 J1 J2 0 0.1 0 0 0\n";
        assert!(parse_network(short)
            .unwrap_err()
            .to_string()
            .contains("nonpositive length"));
        let thin = "[JUNCTIONS]\nJ1\nJ2\n[PIPES]\nP1 J1 J2 5 -1 0 0 0\n";
        assert!(parse_network(thin)
            .unwrap_err()
            .to_string()
            .contains("nonpositive diameter"));
    }

    #[test]
    fn end_section_stops_parsing() {
        let net = parse_network("[JUNCTIONS]\nJ1\n[END]\ngarbage here\n").unwrap();
        assert_eq!(net.node_count(), 1);
    }
}
