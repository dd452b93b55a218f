//! Reaction-diffusion models on a periodic cubic lattice.
//!
//! A spatial model is flattened into an ordinary [`ReactionNetwork`] whose
//! species are `(subvolume, species)` pairs and whose channels are every local
//! reaction in every subvolume plus six diffusive jumps per species and
//! subvolume. Flat channel layout, with `stride = M_local + 6·S`:
//!
//! ```text
//! v·stride + j              local reaction j in subvolume v
//! v·stride + M_local + 6s + d   species s jumping from v in direction d
//! ```
//!
//! Directions are `+x, −x, +y, −y, +z, −z`. Flat species index is `v·S + s`.

use std::sync::Arc;

use crate::error::SpatialError;
use crate::model::{Channel, DependencyGraph, ReactionNetwork};
use crate::rng::RngStream;

mod nsm;

pub use nsm::NsmQueue;

/// Avogadro's number, mol⁻¹.
pub const AVOGADRO: f64 = 6.022_140_76e23;

/// Liters per cubic micrometre.
pub const LITERS_PER_UM3: f64 = 1e-15;

/// Periodic cubic lattice of `nx·ny·nz` subvolumes with edge `side` (μm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub dims: (usize, usize, usize),
    pub side: f64,
}

impl Mesh {
    pub fn new(nx: usize, ny: usize, nz: usize, side: f64) -> Result<Self, SpatialError> {
        if nx == 0 || ny == 0 || nz == 0 || !(side > 0.0) || !side.is_finite() {
            return Err(SpatialError::InvalidMesh);
        }
        Ok(Mesh { dims: (nx, ny, nz), side })
    }

    pub fn cube(n: usize, side: f64) -> Result<Self, SpatialError> {
        Self::new(n, n, n, side)
    }

    pub fn subvolume_count(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    /// Subvolume volume in μm³.
    pub fn subvolume_volume(&self) -> f64 {
        self.side.powi(3)
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    pub fn coords(&self, v: usize) -> (usize, usize, usize) {
        let (nx, ny, _) = self.dims;
        (v % nx, (v / nx) % ny, v / (nx * ny))
    }

    /// Periodic neighbour of `v` in direction `d` (0..6: +x −x +y −y +z −z).
    pub fn neighbor(&self, v: usize, d: usize) -> usize {
        let (nx, ny, nz) = self.dims;
        let (x, y, z) = self.coords(v);
        let step = |c: usize, n: usize, up: bool| if up { (c + 1) % n } else { (c + n - 1) % n };
        match d {
            0 => self.index(step(x, nx, true), y, z),
            1 => self.index(step(x, nx, false), y, z),
            2 => self.index(x, step(y, ny, true), z),
            3 => self.index(x, step(y, ny, false), z),
            4 => self.index(x, y, step(z, nz, true)),
            5 => self.index(x, y, step(z, nz, false)),
            _ => panic!("direction {d} out of range"),
        }
    }
}

/// Per-molecule jump rate `D / l²` (s⁻¹) times the copy number, for one
/// direction.
pub fn diffusion_propensity(diffusion: f64, side: f64, copies: u64) -> f64 {
    copies as f64 * diffusion / (side * side)
}

/// Channel grouping consumed by the next subvolume method: `subvolumes`
/// blocks of `stride` consecutive channels, the first `reactions` of each
/// being reactions and the rest diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubvolumeLayout {
    pub subvolumes: usize,
    pub stride: usize,
    pub reactions: usize,
}

impl SubvolumeLayout {
    pub fn well_mixed(channels: usize) -> Self {
        SubvolumeLayout { subvolumes: 1, stride: channels, reactions: channels }
    }

    pub fn channel_count(&self) -> usize {
        self.subvolumes * self.stride
    }

    #[inline]
    pub fn subvolume_of(&self, channel: usize) -> usize {
        channel / self.stride
    }
}

/// What a flat channel index stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlatChannel {
    Reaction { subvolume: usize, local: usize },
    Diffusion { subvolume: usize, species: usize, direction: usize },
}

/// A flattened RDME model.
#[derive(Debug, Clone)]
pub struct SpatialModel {
    pub mesh: Mesh,
    pub local: ReactionNetwork,
    pub diffusion: Vec<f64>,
    pub network: Arc<ReactionNetwork>,
    pub graph: Arc<DependencyGraph>,
    pub layout: Arc<SubvolumeLayout>,
}

impl SpatialModel {
    pub fn channel_count(&self) -> usize {
        self.network.channel_count()
    }

    pub fn flat_channel(&self, c: usize) -> FlatChannel {
        let stride = self.layout.stride;
        let (v, k) = (c / stride, c % stride);
        let m_local = self.local.channel_count();
        if k < m_local {
            FlatChannel::Reaction { subvolume: v, local: k }
        } else {
            let k = k - m_local;
            FlatChannel::Diffusion { subvolume: v, species: k / 6, direction: k % 6 }
        }
    }

    pub fn channel_index(&self, ch: FlatChannel) -> usize {
        let stride = self.layout.stride;
        let m_local = self.local.channel_count();
        match ch {
            FlatChannel::Reaction { subvolume, local } => subvolume * stride + local,
            FlatChannel::Diffusion { subvolume, species, direction } => {
                subvolume * stride + m_local + 6 * species + direction
            }
        }
    }

    pub fn species_index(&self, subvolume: usize, species: usize) -> usize {
        subvolume * self.local.species_count() + species
    }

    /// Total copies of each local species over the whole mesh.
    pub fn species_totals(&self, populations: &[u64]) -> Vec<u64> {
        let s = self.local.species_count();
        let mut totals = vec![0; s];
        for chunk in populations.chunks_exact(s) {
            for (t, &n) in totals.iter_mut().zip(chunk) {
                *t += n;
            }
        }
        totals
    }
}

/// Duplicates `local` in every subvolume and adds diffusive jumps with rate
/// constant `D_s / l²`. Rate constants of `local` must already be scaled to
/// the subvolume volume. Self-loop jumps on degenerate meshes get rate 0.
pub fn flatten_rdme(
    local: &ReactionNetwork,
    mesh: Mesh,
    diffusion: &[f64],
) -> Result<SpatialModel, SpatialError> {
    let s = local.species_count();
    assert_eq!(diffusion.len(), s, "one diffusion coefficient per species");
    let n = mesh.subvolume_count();
    let m_local = local.channel_count();
    let stride = m_local + 6 * s;

    let mut species = Vec::with_capacity(n * s);
    for v in 0..n {
        for name in local.species() {
            species.push(format!("{name}@{v}"));
        }
    }

    let offset = |v: usize, sp: u32| (v * s) as u32 + sp;
    let mut channels = Vec::with_capacity(n * stride);
    for v in 0..n {
        for ch in local.channels() {
            let reactants = ch.reactants.iter().map(|&(sp, c)| (offset(v, sp), c)).collect();
            let changes = ch.changes.iter().map(|&(sp, d)| (offset(v, sp), d)).collect();
            channels.push(Channel {
                name: format!("{}@{v}", ch.name),
                reactants,
                changes,
                rate_constant: ch.rate_constant,
                law: ch.law,
            });
        }
        for (sp, name) in local.species().iter().enumerate() {
            let src = offset(v, sp as u32);
            for d in 0..6 {
                let w = mesh.neighbor(v, d);
                let dst = offset(w, sp as u32);
                let (rate, changes) = if w == v {
                    (0.0, Default::default())
                } else {
                    (diffusion[sp] / (mesh.side * mesh.side), [(src, -1), (dst, 1)].into_iter().collect())
                };
                channels.push(Channel {
                    name: format!("diff_{name}_{d}@{v}"),
                    reactants: [(src, 1)].into_iter().collect(),
                    changes,
                    rate_constant: rate,
                    law: crate::model::KineticLaw::Unimolecular,
                });
            }
        }
    }
    let network = ReactionNetwork::new(species, channels)?;
    let graph = DependencyGraph::build(&network);
    Ok(SpatialModel {
        mesh,
        local: local.clone(),
        diffusion: diffusion.to_vec(),
        network: Arc::new(network),
        graph: Arc::new(graph),
        layout: Arc::new(SubvolumeLayout { subvolumes: n, stride, reactions: m_local }),
    })
}

/// Rate constants of the Elf–Ehrenberg bistable enzyme model.
pub mod elf_ehrenberg {
    /// Production, s⁻¹.
    pub const K1: f64 = 150.0;
    /// Association, (μM)⁻¹ s⁻¹.
    pub const KA_PER_UM: f64 = 46.2;
    /// Dissociation, s⁻¹.
    pub const KD: f64 = 3.82;
    /// Degradation, s⁻¹.
    pub const K4: f64 = 6.0;
    /// Diffusion, μm² s⁻¹ (10⁻⁸ cm² s⁻¹).
    pub const DIFFUSION: f64 = 1.0;
    /// Initial concentration of each enzyme, nM.
    pub const ENZYME_NM: f64 = 12.3;

    pub const SPECIES: [&str; 8] = ["E_A", "E_B", "A", "B", "E_AB", "E_AB2", "E_BA", "E_BA2"];
}

/// Converts a bimolecular constant in (μM)⁻¹ s⁻¹ to a stochastic rate
/// constant (s⁻¹) in a volume of `volume_um3` μm³: `c = k / (N_A · V)` with
/// `k` in M⁻¹ s⁻¹ and `V` in liters.
pub fn bimolecular_stochastic(k_per_um: f64, volume_um3: f64) -> f64 {
    let k_per_molar = k_per_um * 1e6;
    k_per_molar / (AVOGADRO * volume_um3 * LITERS_PER_UM3)
}

/// Copy number of a species at `nanomolar` concentration in `volume_um3`.
pub fn copies_at(nanomolar: f64, volume_um3: f64) -> u64 {
    (nanomolar * 1e-9 * AVOGADRO * volume_um3 * LITERS_PER_UM3).round() as u64
}

/// The 8-species, 12-channel Elf–Ehrenberg network with bimolecular
/// constants scaled to `volume_um3`.
pub fn elf_ehrenberg_network(volume_um3: f64) -> ReactionNetwork {
    use elf_ehrenberg::*;
    let ca = bimolecular_stochastic(KA_PER_UM, volume_um3);
    let [ea, eb, a, b, eab, eab2, eba, eba2] = [0u32, 1, 2, 3, 4, 5, 6, 7];
    let ch = |name: &str, r: &[(u32, u32)], p: &[(u32, u32)], k: f64| {
        Channel::new(name, r, p, k).expect("valid channel")
    };
    let channels = vec![
        ch("prod_A", &[(ea, 1)], &[(ea, 1), (a, 1)], K1),
        ch("prod_B", &[(eb, 1)], &[(eb, 1), (b, 1)], K1),
        ch("bind_EA_B", &[(ea, 1), (b, 1)], &[(eab, 1)], ca),
        ch("unbind_EAB", &[(eab, 1)], &[(ea, 1), (b, 1)], KD),
        ch("bind_EAB_B", &[(eab, 1), (b, 1)], &[(eab2, 1)], ca),
        ch("unbind_EAB2", &[(eab2, 1)], &[(eab, 1), (b, 1)], KD),
        ch("bind_EB_A", &[(eb, 1), (a, 1)], &[(eba, 1)], ca),
        ch("unbind_EBA", &[(eba, 1)], &[(eb, 1), (a, 1)], KD),
        ch("bind_EBA_A", &[(eba, 1), (a, 1)], &[(eba2, 1)], ca),
        ch("unbind_EBA2", &[(eba2, 1)], &[(eba, 1), (a, 1)], KD),
        ch("decay_A", &[(a, 1)], &[], K4),
        ch("decay_B", &[(b, 1)], &[], K4),
    ];
    ReactionNetwork::new(SPECIES.iter().map(|s| s.to_string()).collect(), channels)
        .expect("valid network")
}

/// Well-mixed Elf–Ehrenberg model in `volume_um3`: network and initial
/// populations (enzymes at 12.3 nM, everything else zero).
pub fn elf_ehrenberg_well_mixed(volume_um3: f64) -> (ReactionNetwork, Vec<u64>) {
    let enzymes = copies_at(elf_ehrenberg::ENZYME_NM, volume_um3);
    let mut initial = vec![0; 8];
    initial[0] = enzymes;
    initial[1] = enzymes;
    (elf_ehrenberg_network(volume_um3), initial)
}

/// Spatial Elf–Ehrenberg model on a `domain³` μm³ periodic cube cut into
/// subvolumes of side `side`. Enzymes are scattered i.i.d. uniformly over
/// subvolumes using `placement_seed`.
pub fn elf_ehrenberg_model(
    domain: f64,
    side: f64,
    placement_seed: u64,
) -> Result<(SpatialModel, Vec<u64>), SpatialError> {
    let ratio = domain / side;
    let n = ratio.round();
    if !(side > 0.0) || n < 1.0 || (ratio - n).abs() > 1e-9 * n {
        return Err(SpatialError::NonDivisibleDomain { domain, side });
    }
    let mesh = Mesh::cube(n as usize, side)?;
    let local = elf_ehrenberg_network(mesh.subvolume_volume());
    let model = flatten_rdme(&local, mesh, &[elf_ehrenberg::DIFFUSION; 8])?;

    let enzymes = copies_at(elf_ehrenberg::ENZYME_NM, domain.powi(3));
    let mut populations = vec![0u64; model.network.species_count()];
    let mut rng = RngStream::new(placement_seed);
    let subvolumes = mesh.subvolume_count();
    for species in [0usize, 1] {
        for _ in 0..enzymes {
            let v = rng.below(subvolumes);
            populations[model.species_index(v, species)] += 1;
        }
    }
    Ok((model, populations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_sizes_and_wrap() {
        assert_eq!(Mesh::cube(20, 0.6).unwrap().subvolume_count(), 8000);
        assert_eq!(Mesh::cube(60, 0.2).unwrap().subvolume_count(), 216_000);
        let m = Mesh::new(4, 3, 2, 1.0).unwrap();
        let v = m.index(3, 0, 1);
        assert_eq!(m.coords(m.neighbor(v, 0)), (0, 0, 1));
        assert_eq!(m.coords(m.neighbor(v, 3)), (3, 2, 1));
        assert_eq!(m.coords(m.neighbor(v, 4)), (3, 0, 0));
        for d in 0..6 {
            let w = m.neighbor(v, d);
            assert_eq!(m.neighbor(w, d ^ 1), v);
        }
        let single = Mesh::cube(1, 1.0).unwrap();
        assert!((0..6).all(|d| single.neighbor(0, d) == 0));
        assert!(Mesh::new(0, 1, 1, 1.0).is_err());
        assert!(Mesh::new(1, 1, 1, 0.0).is_err());
    }

    #[test]
    fn diffusion_rates() {
        // 1e-8 cm²/s = 1e-8 · 1e8 μm²/s
        let d = 1e-8 * 1e8;
        assert!((diffusion_propensity(d, 0.5, 1) - 4.0).abs() < 1e-12);
        assert_eq!(diffusion_propensity(1.0, 0.5, 0), 0.0);
        assert!((diffusion_propensity(1.0, 0.2, 3) - 75.0).abs() < 1e-9);
    }

    #[test]
    fn flat_channel_counts() {
        let (ee, _) = elf_ehrenberg_well_mixed(1.0);
        let model = flatten_rdme(&ee, Mesh::cube(2, 0.5).unwrap(), &[1.0; 8]).unwrap();
        assert_eq!(model.channel_count(), 8 * (12 + 48));

        let a = Channel::new("noop", &[(0, 1)], &[(0, 1)], 0.0).unwrap();
        let local = ReactionNetwork::new(vec!["A".into()], vec![a]).unwrap();
        let model = flatten_rdme(&local, Mesh::new(1, 1, 2, 1.0).unwrap(), &[1.0]).unwrap();
        assert_eq!(model.layout.stride, 7);
        assert_eq!(model.channel_count(), 2 * 7);
    }

    #[test]
    fn channel_index_is_a_bijection() {
        let (ee, _) = elf_ehrenberg_well_mixed(1.0);
        let model = flatten_rdme(&ee, Mesh::new(3, 2, 2, 0.5).unwrap(), &[1.0; 8]).unwrap();
        for c in 0..model.channel_count() {
            assert_eq!(model.channel_index(model.flat_channel(c)), c);
        }
        let c = model.channel_index(FlatChannel::Diffusion { subvolume: 5, species: 3, direction: 2 });
        assert_eq!(model.network.channels()[c].name, "diff_B_2@5");
    }

    #[test]
    fn self_loops_are_inert_on_thin_meshes() {
        let (ee, _) = elf_ehrenberg_well_mixed(1.0);
        let model = flatten_rdme(&ee, Mesh::new(1, 2, 3, 0.5).unwrap(), &[1.0; 8]).unwrap();
        for c in 0..model.channel_count() {
            if let FlatChannel::Diffusion { subvolume, direction, .. } = model.flat_channel(c) {
                let ch = &model.network.channels()[c];
                if model.mesh.neighbor(subvolume, direction) == subvolume {
                    assert_eq!(ch.rate_constant, 0.0);
                    assert!(ch.changes.is_empty());
                } else {
                    assert_eq!(ch.rate_constant, 4.0);
                }
            }
        }
    }

    #[test]
    fn unit_conversions() {
        // 46.2 μM⁻¹s⁻¹ in 1 μm³
        let c = bimolecular_stochastic(46.2, 1.0);
        assert!((c - 4.62e7 / (AVOGADRO * 1e-15)).abs() < 1e-15);
        let n = copies_at(12.3, 12f64.powi(3));
        assert!((n as f64 - 12.3e-9 * 6.022e23 * 1.728e-12).abs() < 5.0, "{n}");
    }

    #[test]
    fn elf_ehrenberg_builder() {
        let (model, pops) = elf_ehrenberg_model(3.0, 0.6, 7).unwrap();
        assert_eq!(model.mesh.dims, (5, 5, 5));
        assert_eq!(model.channel_count(), 125 * 60);
        let totals = model.species_totals(&pops);
        let e = copies_at(12.3, 27.0);
        assert_eq!(totals, vec![e, e, 0, 0, 0, 0, 0, 0]);
        assert!(matches!(
            elf_ehrenberg_model(1.0, 0.3, 1),
            Err(SpatialError::NonDivisibleDomain { .. })
        ));
    }
}
