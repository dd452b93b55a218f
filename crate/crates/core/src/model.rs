//! Well-mixed reaction networks: channels, mass-action propensities, state
//! updates and the channel dependency graph.

use smallvec::SmallVec;

use crate::error::ModelError;

/// Elementary mass-action kinetic laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticLaw {
    ZerothOrder,
    Unimolecular,
    BimolecularDistinct,
    BimolecularIdentical,
}

impl KineticLaw {
    /// Infers the law from a reactant multiset given as (species, coefficient).
    pub fn from_reactants(reactants: &[(u32, u32)]) -> Option<Self> {
        let order: u32 = reactants.iter().map(|&(_, c)| c).sum();
        match (order, reactants.len()) {
            (0, _) => Some(KineticLaw::ZerothOrder),
            (1, 1) => Some(KineticLaw::Unimolecular),
            (2, 2) => Some(KineticLaw::BimolecularDistinct),
            (2, 1) => Some(KineticLaw::BimolecularIdentical),
            _ => None,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            KineticLaw::ZerothOrder => 0,
            KineticLaw::Unimolecular => 1,
            KineticLaw::BimolecularDistinct | KineticLaw::BimolecularIdentical => 2,
        }
    }
}

/// One reaction channel. Reactants are (species, coefficient) with nonzero
/// coefficients; `changes` is the sparse net stoichiometry (nonzero entries only).
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub reactants: SmallVec<[(u32, u32); 2]>,
    pub changes: SmallVec<[(u32, i32); 3]>,
    pub rate_constant: f64,
    pub law: KineticLaw,
}

impl Channel {
    /// Builds a channel from reactant and product multisets. Repeated species
    /// on one side are merged; the net change is products minus reactants.
    pub fn new(
        name: impl Into<String>,
        reactants: &[(u32, u32)],
        products: &[(u32, u32)],
        rate_constant: f64,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if !(rate_constant >= 0.0) || !rate_constant.is_finite() {
            return Err(ModelError::NegativeRate { channel: name, rate: rate_constant });
        }
        let reactants = merge_terms(reactants);
        let products = merge_terms(products);
        let law = KineticLaw::from_reactants(&reactants).ok_or_else(|| {
            ModelError::UnsupportedOrder {
                channel: name.clone(),
                order: reactants.iter().map(|&(_, c)| c).sum(),
            }
        })?;

        let mut changes: SmallVec<[(u32, i32); 3]> = SmallVec::new();
        for &(s, c) in &reactants {
            add_change(&mut changes, s, -(c as i32));
        }
        for &(s, c) in &products {
            add_change(&mut changes, s, c as i32);
        }
        changes.retain(|&mut (_, d)| d != 0);
        changes.sort_unstable_by_key(|&(s, _)| s);

        Ok(Channel { name, reactants, changes, rate_constant, law })
    }

    /// Mass-action propensity in s⁻¹. Exactly zero whenever a reactant is
    /// short.
    #[inline]
    pub fn propensity(&self, populations: &[u64]) -> f64 {
        let k = self.rate_constant;
        match self.law {
            KineticLaw::ZerothOrder => k,
            KineticLaw::Unimolecular => {
                let n = populations[self.reactants[0].0 as usize];
                k * n as f64
            }
            KineticLaw::BimolecularDistinct => {
                let a = populations[self.reactants[0].0 as usize];
                let b = populations[self.reactants[1].0 as usize];
                k * a as f64 * b as f64
            }
            KineticLaw::BimolecularIdentical => {
                let n = populations[self.reactants[0].0 as usize];
                if n < 2 {
                    0.0
                } else {
                    k * (n * (n - 1) / 2) as f64
                }
            }
        }
    }
}

fn merge_terms(terms: &[(u32, u32)]) -> SmallVec<[(u32, u32); 2]> {
    let mut out: SmallVec<[(u32, u32); 2]> = SmallVec::new();
    for &(s, c) in terms {
        if c == 0 {
            continue;
        }
        match out.iter_mut().find(|(t, _)| *t == s) {
            Some(entry) => entry.1 += c,
            None => out.push((s, c)),
        }
    }
    out.sort_unstable_by_key(|&(s, _)| s);
    out
}

fn add_change(changes: &mut SmallVec<[(u32, i32); 3]>, s: u32, d: i32) {
    match changes.iter_mut().find(|(t, _)| *t == s) {
        Some(entry) => entry.1 += d,
        None => changes.push((s, d)),
    }
}

/// A validated well-mixed network. Immutable once built.
#[derive(Debug, Clone)]
pub struct ReactionNetwork {
    species: Vec<String>,
    channels: Vec<Channel>,
}

impl ReactionNetwork {
    pub fn new(species: Vec<String>, channels: Vec<Channel>) -> Result<Self, ModelError> {
        if channels.is_empty() {
            return Err(ModelError::NoChannels);
        }
        let s = species.len() as u32;
        for ch in &channels {
            let bad = ch
                .reactants
                .iter()
                .map(|&(i, _)| i)
                .chain(ch.changes.iter().map(|&(i, _)| i))
                .find(|&i| i >= s);
            if let Some(index) = bad {
                return Err(ModelError::SpeciesOutOfRange { channel: ch.name.clone(), index });
            }
        }
        Ok(ReactionNetwork { species, channels })
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    /// Fills `out` with every channel's propensity and returns the sum,
    /// accumulated in ascending channel order.
    pub fn compute_all_propensities(&self, populations: &[u64], out: &mut Vec<f64>) -> f64 {
        out.clear();
        out.extend(self.channels.iter().map(|c| c.propensity(populations)));
        out.iter().sum()
    }

    pub fn propensities(&self, populations: &[u64]) -> PropensityVector {
        let mut values = Vec::with_capacity(self.channels.len());
        let sum = self.compute_all_propensities(populations, &mut values);
        PropensityVector { values, sum }
    }

    /// Applies channel `j`'s net change in place. Fails without modifying the
    /// state if a population would go negative.
    pub fn apply_reaction(&self, state: &mut SystemState, j: usize) -> Result<(), ModelError> {
        let ch = &self.channels[j];
        for &(s, d) in &ch.changes {
            if d < 0 && state.populations[s as usize] < (-d) as u64 {
                return Err(ModelError::NegativePopulation {
                    channel: ch.name.clone(),
                    species: self.species[s as usize].clone(),
                });
            }
        }
        for &(s, d) in &ch.changes {
            let n = &mut state.populations[s as usize];
            *n = n.wrapping_add_signed(d as i64);
        }
        Ok(())
    }
}

/// Current per-channel rates and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityVector {
    pub values: Vec<f64>,
    pub sum: f64,
}

/// Population vector and clock of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub populations: Vec<u64>,
    pub time: f64,
}

impl SystemState {
    pub fn new(populations: Vec<u64>) -> Self {
        SystemState { populations, time: 0.0 }
    }
}

/// For each channel, the sorted set of channels whose propensity may change
/// when it fires. Stored in compressed-row form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl DependencyGraph {
    /// `i ∈ affects(j)` iff `i == j` or some species changed by `j` is a
    /// reactant of `i`. Zero-propensity channels are kept.
    pub fn build(network: &ReactionNetwork) -> Self {
        let s = network.species_count();
        let m = network.channel_count();

        // species -> channels that consume it
        let mut counts = vec![0usize; s + 1];
        for ch in network.channels() {
            for &(sp, _) in &ch.reactants {
                counts[sp as usize + 1] += 1;
            }
        }
        for i in 0..s {
            counts[i + 1] += counts[i];
        }
        let mut consumers = vec![0u32; counts[s]];
        let mut fill = counts.clone();
        for (j, ch) in network.channels().iter().enumerate() {
            for &(sp, _) in &ch.reactants {
                consumers[fill[sp as usize]] = j as u32;
                fill[sp as usize] += 1;
            }
        }

        let mut offsets = Vec::with_capacity(m + 1);
        let mut targets = Vec::new();
        let mut scratch: Vec<u32> = Vec::new();
        offsets.push(0);
        for (j, ch) in network.channels().iter().enumerate() {
            scratch.clear();
            scratch.push(j as u32);
            for &(sp, _) in &ch.changes {
                let sp = sp as usize;
                scratch.extend_from_slice(&consumers[counts[sp]..counts[sp + 1]]);
            }
            scratch.sort_unstable();
            scratch.dedup();
            targets.extend_from_slice(&scratch);
            offsets.push(targets.len());
        }
        DependencyGraph { offsets, targets }
    }

    /// Builds a graph from explicit adjacency lists. Each list is sorted,
    /// deduplicated and made to contain its own index.
    pub fn from_lists(lists: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (j, mut list) in lists.into_iter().enumerate() {
            list.push(j as u32);
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        DependencyGraph { offsets, targets }
    }

    #[inline]
    pub fn affects(&self, j: usize) -> &[u32] {
        &self.targets[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn channel_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Mean out-degree over channels (unweighted).
    pub fn mean_out_degree(&self) -> f64 {
        self.targets.len() as f64 / self.channel_count() as f64
    }
}
