//! Plain-text model files.
//!
//! ```text
//! # birth-death
//! species A 0
//! reaction birth: 0 -> A @ 10
//! reaction death: A -> 0 @ 1
//! reaction dimer: 2*A -> B @ 0.01
//! ```
//!
//! Species may be declared anywhere in the file; channels keep file order.

use std::collections::HashMap;

use crate::error::{ModelError, ParseError};
use crate::model::{Channel, ReactionNetwork};

/// A parsed well-mixed model: network plus initial populations.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub network: ReactionNetwork,
    pub initial: Vec<u64>,
}

pub fn parse_model(text: &str) -> Result<ModelFile, ParseError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();

    let mut names = Vec::new();
    let mut initial = Vec::new();
    let mut index = HashMap::new();
    for &(line, l) in &lines {
        let Some(rest) = keyword(l, "species") else { continue };
        let mut parts = rest.split_whitespace();
        let (Some(name), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(syntax(line, "expected `species <name> <initial count>`"));
        };
        check_name(line, name)?;
        let count: u64 = count
            .parse()
            .map_err(|_| syntax(line, format!("initial count `{count}` is not a nonnegative integer")))?;
        if index.insert(name.to_string(), names.len() as u32).is_some() {
            return Err(ParseError::DuplicateSpecies { line, name: name.to_string() });
        }
        names.push(name.to_string());
        initial.push(count);
    }

    let mut channels = Vec::new();
    for &(line, l) in &lines {
        if keyword(l, "species").is_some() {
            continue;
        }
        let Some(rest) = keyword(l, "reaction") else {
            return Err(syntax(line, "expected `species` or `reaction`"));
        };
        channels.push(parse_reaction(line, rest, &index)?);
    }

    let network = ReactionNetwork::new(names, channels).map_err(ParseError::Network)?;
    Ok(ModelFile { network, initial })
}

fn keyword<'a>(line: &'a str, word: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(word)?;
    (rest.is_empty() || rest.starts_with(char::is_whitespace)).then_some(rest.trim_start())
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

fn check_name(line: usize, name: &str) -> Result<(), ParseError> {
    let ok = name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(syntax(line, format!("invalid name `{name}`")))
    }
}

fn parse_reaction(
    line: usize,
    rest: &str,
    index: &HashMap<String, u32>,
) -> Result<Channel, ParseError> {
    let (name, body) = rest
        .split_once(':')
        .ok_or_else(|| syntax(line, "expected `reaction <name>: <reactants> -> <products> @ <rate>`"))?;
    let name = name.trim();
    check_name(line, name)?;
    let (equation, rate) = body.split_once('@').ok_or_else(|| syntax(line, "missing `@ <rate>`"))?;
    let rate_text = rate.trim();
    let rate: f64 = rate_text
        .parse()
        .map_err(|_| syntax(line, format!("rate `{rate_text}` is not a number")))?;
    let (lhs, rhs) = equation.split_once("->").ok_or_else(|| syntax(line, "missing `->`"))?;
    let reactants = parse_side(line, lhs, index)?;
    let products = parse_side(line, rhs, index)?;
    Channel::new(name, &reactants, &products, rate).map_err(|source| ParseError::Model { line, source })
}

fn parse_side(line: usize, side: &str, index: &HashMap<String, u32>) -> Result<Vec<(u32, u32)>, ParseError> {
    let side = side.trim();
    if side == "0" || side == "∅" {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    for term in side.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err(syntax(line, "empty term"));
        }
        let (coeff, species) = match term.split_once('*') {
            Some((c, s)) => {
                let c = c.trim();
                let c: u32 = c.parse().map_err(|_| syntax(line, format!("bad coefficient `{c}`")))?;
                (c, s.trim())
            }
            None => (1, term),
        };
        let &s = index
            .get(species)
            .ok_or_else(|| ParseError::UnknownSpecies { line, name: species.to_string() })?;
        terms.push((s, coeff));
    }
    Ok(terms)
}

/// Renders a network back to the file format.
pub fn write_model(network: &ReactionNetwork, initial: &[u64]) -> String {
    let mut out = String::new();
    for (name, n) in network.species().iter().zip(initial) {
        out.push_str(&format!("species {name} {n}\n"));
    }
    let side = |terms: &mut dyn Iterator<Item = (u32, u32)>| {
        let parts: Vec<String> = terms
            .map(|(s, c)| {
                let name = &network.species()[s as usize];
                if c == 1 {
                    name.clone()
                } else {
                    format!("{c}*{name}")
                }
            })
            .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    };
    for ch in network.channels() {
        // products = reactants + net change
        let mut products: Vec<(u32, i64)> = ch.reactants.iter().map(|&(s, c)| (s, c as i64)).collect();
        for &(s, d) in &ch.changes {
            match products.iter_mut().find(|(t, _)| *t == s) {
                Some(p) => p.1 += d as i64,
                None => products.push((s, d as i64)),
            }
        }
        products.sort_unstable();
        let lhs = side(&mut ch.reactants.iter().copied());
        let rhs = side(&mut products.iter().filter(|p| p.1 > 0).map(|&(s, c)| (s, c as u32)));
        out.push_str(&format!("reaction {}: {lhs} -> {rhs} @ {:?}\n", ch.name, ch.rate_constant));
    }
    out
}

/// Returns the model-error category of a parse error, if any.
pub fn model_error(err: &ParseError) -> Option<&ModelError> {
    match err {
        ParseError::Model { source, .. } | ParseError::Network(source) => Some(source),
        _ => None,
    }
}
