use binned_ssa::queues::{BinaryMinHeap, BinnedEventTable, CompositionRejectionTable};
use binned_ssa::spatial::{flatten_rdme, Mesh};
use binned_ssa::{BinPolicy, Channel, DependencyGraph, ReactionNetwork, RngStream};
use proptest::prelude::*;

/// Brute force: i is affected by j when j changes any species i reads.
fn brute_force_affects(network: &ReactionNetwork, j: usize) -> Vec<u32> {
    let fired = &network.channels()[j];
    (0..network.channel_count())
        .filter(|&i| {
            i == j
                || network.channels()[i]
                    .reactants
                    .iter()
                    .any(|&(s, _)| fired.changes.iter().any(|&(t, d)| t == s && d != 0))
        })
        .map(|i| i as u32)
        .collect()
}

fn arb_network() -> impl Strategy<Value = ReactionNetwork> {
    (1usize..6, 1usize..=20).prop_flat_map(|(species, channels)| {
        let term = (0..species as u32, 1u32..=2);
        let side = prop::collection::vec(term, 0..=2);
        prop::collection::vec((side.clone(), side, 0.0f64..5.0), channels).prop_map(move |chs| {
            let channels = chs
                .into_iter()
                .enumerate()
                .map(|(k, (mut r, p, rate))| {
                    // keep reactions at most bimolecular
                    r.truncate(1);
                    Channel::new(&format!("c{k}"), &r, &p, rate).unwrap()
                })
                .collect();
            ReactionNetwork::new((0..species).map(|s| format!("S{s}")).collect(), channels).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn dependency_graph_matches_brute_force(network in arb_network()) {
        let graph = DependencyGraph::build(&network);
        for j in 0..network.channel_count() {
            let expected = brute_force_affects(&network, j);
            prop_assert_eq!(graph.affects(j), expected.as_slice());
        }
    }

    #[test]
    fn heap_tracks_minimum(
        times in prop::collection::vec(0.0f64..100.0, 1..200),
        updates in prop::collection::vec((any::<prop::sample::Index>(), prop_oneof![0.0f64..100.0, Just(f64::INFINITY)]), 0..500),
    ) {
        let mut heap = BinaryMinHeap::from_times(&times);
        let mut shadow = times.clone();
        for (idx, t) in updates {
            let id = idx.index(shadow.len());
            heap.update(id, t);
            shadow[id] = t;
            prop_assert!(heap.audit().is_ok());
            let min = shadow.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(heap.peek().map(|p| p.0), Some(min));
        }
    }

    #[test]
    fn composition_rejection_sums_survive_updates(
        props in prop::collection::vec(prop_oneof![Just(0.0), 1e-6f64..1e6], 1..100),
        updates in prop::collection::vec((any::<prop::sample::Index>(), prop_oneof![Just(0.0), 1e-6f64..1e6]), 0..300),
    ) {
        let mut table = CompositionRejectionTable::new(&props);
        let mut shadow = props.clone();
        for (idx, a) in updates {
            let j = idx.index(shadow.len());
            table.set(j, a);
            shadow[j] = a;
        }
        prop_assert!(table.audit().is_ok(), "{:?}", table.audit());
        prop_assert_eq!(table.active(), shadow.iter().filter(|&&a| a > 0.0).count());
        let mut rng = RngStream::new(3);
        if let Some(pick) = table.select(&mut rng).unwrap() {
            prop_assert!(shadow[pick.index] > 0.0);
        }
    }

    #[test]
    fn binned_table_audit_after_random_operations(
        seed in any::<u64>(),
        width in prop_oneof![Just(None), (0.01f64..10.0).prop_map(Some)],
        bins in prop_oneof![Just(None), (1usize..50).prop_map(Some)],
        m in 1usize..80,
    ) {
        let policy = BinPolicy { width, bins, ..BinPolicy::default() };
        let mut rng = RngStream::new(seed);
        let mut props: Vec<f64> = (0..m).map(|_| if rng.below(4) == 0 { 0.0 } else { rng.uniform() }).collect();
        let times: Vec<f64> = props.iter().map(|&a| rng.exponential(a)).collect();
        let mut table = BinnedEventTable::with_times(policy, &props, &times, 0.0);
        let mut now = 0.0;
        for _ in 0..2_000 {
            match rng.below(5) {
                0..=2 => {
                    let Some((ev, _)) = table.select_next(now) else { continue };
                    // the selected event is the global minimum
                    let min = (0..m).map(|j| table.event_time(j)).fold(f64::INFINITY, f64::min);
                    prop_assert_eq!(ev.time, min);
                    prop_assert!(ev.time >= now);
                    now = ev.time;
                    let a = props[ev.channel];
                    table.update(ev.channel, a, now + rng.exponential(a));
                }
                3 => {
                    let j = rng.below(m);
                    let a = if rng.below(3) == 0 { 0.0 } else { 3.0 * rng.uniform() };
                    props[j] = a;
                    table.update(j, a, now + rng.exponential(a));
                }
                _ => table.rebuild(now),
            }
            prop_assert!(table.audit().is_ok(), "{:?}", table.audit());
        }
    }
}

#[test]
fn spatial_dependencies_match_brute_force() {
    let a = Channel::new("dimerize", &[(0, 2)], &[(1, 1)], 0.5).unwrap();
    let b = Channel::new("split", &[(1, 1)], &[(0, 2)], 1.0).unwrap();
    let c = Channel::new("make", &[], &[(2, 1)], 3.0).unwrap();
    let local = ReactionNetwork::new(vec!["A".into(), "B".into(), "C".into()], vec![a, b, c]).unwrap();
    let model = flatten_rdme(&local, Mesh::cube(3, 0.5).unwrap(), &[1.0, 0.5, 0.0]).unwrap();
    assert_eq!(model.channel_count(), 27 * (3 + 18));
    for j in 0..model.channel_count() {
        assert_eq!(model.graph.affects(j), brute_force_affects(&model.network, j).as_slice(), "channel {j}");
    }
    // a jump touches its source and destination: 2 × (1 + 6 + reactions reading it) channels
    let jump = model.channel_index(binned_ssa::spatial::FlatChannel::Diffusion { subvolume: 13, species: 0, direction: 0 });
    assert_eq!(model.graph.affects(jump).len(), 2 * (1 + 6));
}
