//! Static checks on a parsed model, run by `validate` without simulating.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::model::{DependencyGraph, ReactionNetwork};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lint {
    ZeroRate { channel: String },
    NoNetChange { channel: String },
    DuplicateChannelName { channel: String },
    UnusedSpecies { species: String },
    /// A reactant starts below the required count and nothing produces it.
    NeverFires { channel: String, species: String },
}

impl fmt::Display for Lint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lint::ZeroRate { channel } => write!(f, "channel {channel} has rate 0 and never fires"),
            Lint::NoNetChange { channel } => write!(f, "channel {channel} changes no population"),
            Lint::DuplicateChannelName { channel } => write!(f, "channel name {channel} is used more than once"),
            Lint::UnusedSpecies { species } => write!(f, "species {species} appears in no reaction"),
            Lint::NeverFires { channel, species } => {
                write!(f, "channel {channel} can never fire: {species} is never available")
            }
        }
    }
}

pub fn lint_model(network: &ReactionNetwork, initial: &[u64]) -> Vec<Lint> {
    let mut out = Vec::new();
    let channels = network.channels();
    let species = network.species();

    let mut seen = HashSet::new();
    for ch in channels {
        if !seen.insert(ch.name.as_str()) {
            out.push(Lint::DuplicateChannelName { channel: ch.name.clone() });
        }
        if ch.rate_constant == 0.0 {
            out.push(Lint::ZeroRate { channel: ch.name.clone() });
        }
        if ch.changes.iter().all(|&(_, d)| d == 0) {
            out.push(Lint::NoNetChange { channel: ch.name.clone() });
        }
    }

    let mut used = vec![false; species.len()];
    for ch in channels {
        for &(s, _) in &ch.reactants {
            used[s as usize] = true;
        }
        for &(s, _) in &ch.changes {
            used[s as usize] = true;
        }
    }
    for (s, name) in species.iter().enumerate() {
        if !used[s] {
            out.push(Lint::UnusedSpecies { species: name.clone() });
        }
    }

    // Fixed point over "species that can ever reach the count a channel
    // needs": seeded by initial counts, grown by channels that can fire.
    let mut available: Vec<u64> = initial.to_vec();
    let mut can_fire = vec![false; channels.len()];
    loop {
        let mut grew = false;
        for (j, ch) in channels.iter().enumerate() {
            if can_fire[j] || ch.rate_constant == 0.0 {
                continue;
            }
            if ch.reactants.iter().all(|&(s, c)| available[s as usize] >= c as u64) {
                can_fire[j] = true;
                grew = true;
                for &(s, d) in &ch.changes {
                    if d > 0 {
                        // repeated firing makes any produced count reachable
                        available[s as usize] = u64::MAX;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }
    for (j, ch) in channels.iter().enumerate() {
        if can_fire[j] || ch.rate_constant == 0.0 {
            continue;
        }
        if let Some(&(s, _)) = ch.reactants.iter().find(|&&(s, c)| available[s as usize] < c as u64) {
            out.push(Lint::NeverFires { channel: ch.name.clone(), species: species[s as usize].clone() });
        }
    }
    out
}

/// Recomputes every dependency set from a species → readers map and
/// compares it with `graph`.
pub fn audit_dependency_graph(network: &ReactionNetwork, graph: &DependencyGraph) -> Result<(), String> {
    if graph.channel_count() != network.channel_count() {
        return Err(format!("graph has {} channels, network {}", graph.channel_count(), network.channel_count()));
    }
    let mut readers: HashMap<u32, Vec<u32>> = HashMap::new();
    for (i, ch) in network.channels().iter().enumerate() {
        for &(s, _) in &ch.reactants {
            readers.entry(s).or_default().push(i as u32);
        }
    }
    for (j, ch) in network.channels().iter().enumerate() {
        let mut expected: HashSet<u32> = HashSet::from([j as u32]);
        for &(s, d) in &ch.changes {
            if d != 0 {
                expected.extend(readers.get(&s).into_iter().flatten());
            }
        }
        let got = graph.affects(j);
        if got.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("dependency list of {} is not sorted and unique", ch.name));
        }
        let got_set: HashSet<u32> = got.iter().copied().collect();
        if got_set != expected {
            return Err(format!("dependency list of {} has {} entries, expected {}", ch.name, got.len(), expected.len()));
        }
    }
    Ok(())
}
