//! JSON file formats and inline shorthands for graphs, observables, loop
//! systems, and measure serialization.
//!
//! Graph files:
//! `{"type":"finite","states":["1","2"],"edges":[["1","1"],["1","2"],["2","1"]]}`
//! or `{"type":"builtin","name":"full","n":2}`.
//!
//! Observable files:
//! `{"memory":2,"default":0.0,"values":{"1,2":-0.5,"1,1":0.25}}` with words
//! comma-joined over state identifiers.
//!
//! Loop files:
//! `{"type":"loop","f":{"1":1,"2":1},"tail":{"c":1.0,"rho":0.25,"alpha":3.0,
//! "from":2},"weights":{"2":-0.1}}` ("tail" and "weights" optional).
//!
//! Inline shorthands: `builtin:full:N`, `builtin:golden`, and
//! `loop:{f:{1:1,2:1}}` (bare keys allowed, quoted on the fly).

use crate::error::{Error, Result};
use crate::measure::MarkovMeasure;
use crate::observable::LocallyConstantFunction;
use crate::renewal::{LoopSystem, Tail};
use crate::shift::MarkovGraph;
use serde::Deserialize;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Deserialize)]
#[serde(tag = "type")]
enum SystemSpec {
    #[serde(rename = "finite")]
    Finite {
        states: Vec<String>,
        edges: Vec<(String, String)>,
    },
    #[serde(rename = "builtin")]
    Builtin { name: String, n: Option<usize> },
    #[serde(rename = "loop")]
    Loop {
        f: BTreeMap<String, u64>,
        tail: Option<TailSpec>,
        weights: Option<BTreeMap<String, f64>>,
    },
}

#[derive(Debug, Deserialize)]
struct TailSpec {
    c: f64,
    rho: f64,
    alpha: f64,
    from: usize,
}

/// A parsed system: either a finite graph presentation or a renewal loop
/// presentation.
#[derive(Debug, Clone)]
pub enum ParsedSystem {
    Graph(MarkovGraph),
    Loops(LoopSystem),
}

fn build(spec: SystemSpec) -> Result<ParsedSystem> {
    match spec {
        SystemSpec::Finite { states, edges } => {
            Ok(ParsedSystem::Graph(MarkovGraph::from_parts(&states, &edges)?))
        }
        SystemSpec::Builtin { name, n } => match name.as_str() {
            "full" => {
                let n = n.ok_or_else(|| Error::Parse("builtin full needs n".into()))?;
                Ok(ParsedSystem::Graph(MarkovGraph::full_shift(n)?))
            }
            "golden" => Ok(ParsedSystem::Graph(MarkovGraph::golden_mean())),
            other => Err(Error::Parse(format!("unknown builtin graph {other:?}"))),
        },
        SystemSpec::Loop { f, tail, weights } => {
            let parse_keys = |m: BTreeMap<String, u64>| -> Result<BTreeMap<usize, u64>> {
                m.into_iter()
                    .map(|(k, v)| {
                        k.parse::<usize>()
                            .map(|n| (n, v))
                            .map_err(|_| Error::Parse(format!("bad loop length {k:?}")))
                    })
                    .collect()
            };
            let f = parse_keys(f)?;
            let weights = weights
                .unwrap_or_default()
                .into_iter()
                .map(|(k, v)| {
                    k.parse::<usize>()
                        .map(|n| (n, v))
                        .map_err(|_| Error::Parse(format!("bad weight length {k:?}")))
                })
                .collect::<Result<BTreeMap<usize, f64>>>()?;
            let tail = tail.map(|t| Tail {
                c: t.c,
                rho: t.rho,
                alpha: t.alpha,
                from: t.from,
            });
            Ok(ParsedSystem::Loops(LoopSystem::new(f, tail, weights, true)?))
        }
    }
}

/// Parses a system description: inline shorthand (`builtin:...`,
/// `loop:{...}`), inline JSON (starts with `{`), or a path to a JSON file.
pub fn parse_system(input: &str) -> Result<ParsedSystem> {
    let text = if let Some(rest) = input.strip_prefix("builtin:") {
        let mut parts = rest.split(':');
        let name = parts.next().unwrap_or_default();
        match parts.next() {
            Some(n) => format!("{{\"type\":\"builtin\",\"name\":\"{name}\",\"n\":{n}}}"),
            None => format!("{{\"type\":\"builtin\",\"name\":\"{name}\"}}"),
        }
    } else if let Some(rest) = input.strip_prefix("loop:") {
        let body = quote_bare_keys(rest)?;
        // splice the type tag into the object
        let inner = body
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| Error::Parse("loop shorthand needs braces".into()))?;
        format!("{{\"type\":\"loop\",{inner}}}")
    } else if input.trim_start().starts_with('{') {
        input.to_string()
    } else {
        std::fs::read_to_string(input)?
    };
    let spec: SystemSpec =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{e}")))?;
    build(spec)
}

/// Quotes bare identifier/number keys and bare identifier values so the
/// relaxed shorthand becomes strict JSON.
fn quote_bare_keys(src: &str) -> Result<String> {
    let mut out = String::with_capacity(src.len() + 16);
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '"' {
            // copy quoted strings untouched
            out.push(c);
            i += 1;
            while i < chars.len() {
                out.push(chars[i]);
                if chars[i] == '"' {
                    i += 1;
                    break;
                }
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric()
                    || chars[i] == '_'
                    || chars[i] == '-'
                    || chars[i] == '.')
            {
                i += 1;
            }
            let token: String = chars[start..i].iter().collect();
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let is_key = j < chars.len() && chars[j] == ':';
            let is_number = token.parse::<f64>().is_ok();
            if is_key || !is_number {
                out.push('"');
                out.push_str(&token);
                out.push('"');
            } else {
                out.push_str(&token);
            }
            continue;
        }
        out.push(c);
        i += 1;
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct ObservableSpec {
    memory: usize,
    #[serde(default)]
    default: f64,
    #[serde(default)]
    values: HashMap<String, f64>,
}

/// Parses an observable description against a graph: inline JSON, a file
/// path, or the shorthands `indicator:<word>` and `const:<value>`.
pub fn parse_observable(input: &str, g: &MarkovGraph) -> Result<LocallyConstantFunction> {
    if let Some(rest) = input.strip_prefix("indicator:") {
        let word = parse_word(rest, g)?;
        return Ok(LocallyConstantFunction::indicator(&word));
    }
    if let Some(rest) = input.strip_prefix("const:") {
        let c: f64 = rest
            .parse()
            .map_err(|_| Error::Parse(format!("bad constant {rest:?}")))?;
        return Ok(LocallyConstantFunction::constant(c));
    }
    let text = if input.trim_start().starts_with('{') {
        input.to_string()
    } else {
        std::fs::read_to_string(input)?
    };
    let spec: ObservableSpec =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{e}")))?;
    let mut table = HashMap::new();
    for (word, value) in spec.values {
        let w = parse_word(&word, g)?;
        if w.len() != spec.memory {
            return Err(Error::Parse(format!(
                "word {word:?} has length {} but memory is {}",
                w.len(),
                spec.memory
            )));
        }
        table.insert(w, value);
    }
    LocallyConstantFunction::new(spec.memory, table, spec.default)
}

/// Comma-joined state identifiers to internal indices.
pub fn parse_word(text: &str, g: &MarkovGraph) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| g.state(s.trim()))
        .collect::<Result<Vec<usize>>>()
}

/// Measure serialization:
/// `{"alphabet":[...],"pi":[...],"P":[[...]],"provenance":"..."}`.
pub fn measure_to_json(mu: &MarkovMeasure, g: &MarkovGraph) -> serde_json::Value {
    let alphabet: Vec<String> = mu
        .state_words()
        .iter()
        .map(|w| g.word_ids(w).join(","))
        .collect();
    serde_json::json!({
        "alphabet": alphabet,
        "pi": mu.stationary(),
        "P": mu.matrix(),
        "provenance": mu.provenance().to_string(),
    })
}

/// Round-trips a serialized measure back into a [`MarkovMeasure`]
/// (provenance becomes a custom note).
pub fn measure_from_json(value: &serde_json::Value, g: &MarkovGraph) -> Result<MarkovMeasure> {
    #[derive(Deserialize)]
    struct MeasureJson {
        alphabet: Vec<String>,
        pi: Vec<f64>,
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        provenance: Option<serde_json::Value>,
    }
    let mj: MeasureJson =
        serde_json::from_value(value.clone()).map_err(|e| Error::Parse(format!("{e}")))?;
    let states = mj
        .alphabet
        .iter()
        .map(|s| parse_word(s, g))
        .collect::<Result<Vec<_>>>()?;
    let prov = crate::measure::Provenance::Custom(
        mj.provenance
            .map(|v| v.to_string().trim_matches('"').to_string())
            .unwrap_or_else(|| "deserialized".into()),
    );
    MarkovMeasure::new(states, mj.pi, mj.p, prov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_finite_graph_json() {
        let text = r#"{"type":"finite","states":["1","2"],"edges":[["1","1"],["1","2"],["2","1"]]}"#;
        match parse_system(text).unwrap() {
            ParsedSystem::Graph(g) => {
                assert_eq!(g.state_count(), 2);
                assert_eq!(g.edge_count(), 3);
            }
            _ => panic!("graph expected"),
        }
    }

    #[test]
    fn parse_builtin_shorthands() {
        match parse_system("builtin:full:3").unwrap() {
            ParsedSystem::Graph(g) => assert_eq!(g.edge_count(), 9),
            _ => panic!(),
        }
        match parse_system("builtin:golden").unwrap() {
            ParsedSystem::Graph(g) => assert_eq!(g.edge_count(), 3),
            _ => panic!(),
        }
        assert!(parse_system("builtin:nope").is_err());
    }

    #[test]
    fn parse_loop_shorthand_with_bare_keys() {
        match parse_system("loop:{f:{1:1,2:1}}").unwrap() {
            ParsedSystem::Loops(ls) => {
                assert_eq!(ls.f(1), 1.0);
                assert_eq!(ls.f(2), 1.0);
                assert_eq!(ls.f(3), 0.0);
            }
            _ => panic!("loop system expected"),
        }
    }

    #[test]
    fn parse_loop_json_with_tail_and_weights() {
        let text = r#"{"type":"loop","f":{"1":2},"tail":{"c":1.0,"rho":0.25,"alpha":3.0,"from":2},"weights":{"1":-0.1}}"#;
        match parse_system(text).unwrap() {
            ParsedSystem::Loops(ls) => {
                assert_eq!(ls.f(1), 2.0);
                assert!(ls.f(8) >= 1.0);
                assert_eq!(ls.weights().get(&1), Some(&-0.1));
                assert_eq!(ls.radius(), 0.25);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn parse_observable_spec() {
        let g = MarkovGraph::golden_mean();
        let text = r#"{"memory":2,"default":0.0,"values":{"1,2":-0.5,"1,1":0.25}}"#;
        let psi = parse_observable(text, &g).unwrap();
        assert_eq!(psi.memory(), 2);
        assert_eq!(psi.evaluate(&g, &[0, 1]).unwrap(), -0.5);
        assert_eq!(psi.evaluate(&g, &[0, 0]).unwrap(), 0.25);
        assert_eq!(psi.evaluate(&g, &[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn parse_observable_shorthands() {
        let g = MarkovGraph::golden_mean();
        let ind = parse_observable("indicator:1", &g).unwrap();
        assert_eq!(ind.evaluate(&g, &[0]).unwrap(), 1.0);
        let c = parse_observable("const:-2.5", &g).unwrap();
        assert_eq!(c.evaluate(&g, &[1]).unwrap(), -2.5);
    }

    #[test]
    fn observable_rejects_wrong_length_words() {
        let g = MarkovGraph::golden_mean();
        let text = r#"{"memory":2,"values":{"1":-0.5}}"#;
        assert!(matches!(
            parse_observable(text, &g),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn measure_round_trip() {
        let g = MarkovGraph::golden_mean();
        let m = crate::measure::parry_measure(&g, 1e-13).unwrap();
        let json = measure_to_json(&m, &g);
        let back = measure_from_json(&json, &g).unwrap();
        for (a, b) in m.stationary().iter().zip(back.stationary()) {
            assert!((a - b).abs() < 1e-15);
        }
        let psi = LocallyConstantFunction::indicator(&[0]);
        let ia = crate::measure::integrate(&m, &psi, &g).unwrap();
        let ib = crate::measure::integrate(&back, &psi, &g).unwrap();
        assert!((ia - ib).abs() < 1e-14);
    }
}
