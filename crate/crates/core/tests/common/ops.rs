//! Random add/union/rebuild sequences, checked against the e-graph
//! invariants after every rebuild.

use apir::egraph::{EGraph, ENode, Id};
use apir::ir::{AccessPatternShape, Op, Operator, ShapeEnv};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn env() -> ShapeEnv {
    ShapeEnv::new()
        .with("x0", [2, 2])
        .with("x1", [2, 2])
        .with("x2", [2, 2])
        .with("y0", [2, 2, 2])
        .with("y1", [4, 2])
}

pub fn random_node(g: &EGraph, rng: &mut ChaCha8Rng) -> ENode {
    let ids: Vec<Id> = g.classes().map(|c| c.id).collect();
    if ids.is_empty() || rng.gen_bool(0.05) {
        let name = ["x0", "x1", "x2", "y0", "y1"].choose(rng).unwrap();
        return ENode::leaf(Op::Tensor(name.to_string()));
    }
    let a = *ids.choose(rng).unwrap();
    let b = *ids.choose(rng).unwrap();
    let rank = g.shape(a).rank();
    let dim = rng.gen_range(0..rank.max(1));
    let op = match rng.gen_range(0..11) {
        0 => Op::Access(rng.gen_range(0..=rank)),
        1 => {
            let mut p: Vec<usize> = (0..rank.max(1)).collect();
            p.shuffle(rng);
            Op::Transpose(p)
        }
        2 => Op::Flatten,
        3 => Op::Pair,
        4 => Op::CartProd,
        5 => Op::Concat(dim),
        6 => {
            let hi = rng.gen_range(1..=2);
            Op::Slice { dim, lo: hi - 1, hi }
        }
        7 => Op::Compute(*Operator::ALL.choose(rng).unwrap()),
        8 => {
            let s = g.shape(a);
            let (pa, pc) = (apir::ir::product(&s.access), apir::ir::product(&s.compute));
            let split = |n: usize, r: &mut ChaCha8Rng| if n.is_multiple_of(2) && r.gen_bool(0.5) { vec![2, n / 2] } else { vec![n] };
            Op::Reshape(AccessPatternShape::new(split(pa, rng), split(pc, rng)))
        }
        9 => Op::Squeeze(dim),
        _ => Op::Windows {
            window: vec![1; g.shape(a).compute.len().max(1)],
            strides: vec![1; g.shape(a).compute.len().max(1)],
        },
    };
    let children = match op.arity() {
        1 => vec![a],
        _ => vec![a, b],
    };
    ENode::new(op, children)
}

pub fn same_shape_partner(g: &EGraph, rng: &mut ChaCha8Rng) -> Option<(Id, Id)> {
    let ids: Vec<Id> = g.classes().map(|c| c.id).collect();
    let a = *ids.choose(rng)?;
    let partners: Vec<Id> = ids.iter().copied().filter(|&b| b != a && g.shape(b) == g.shape(a)).collect();
    Some((a, *partners.choose(rng)?))
}

/// Runs `ops` random operations; returns how many of each kind succeeded.
pub fn run(seed: u64, ops: usize) -> (usize, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = EGraph::new(env());
    let (mut adds, mut unions, mut rebuilds) = (0, 0, 0);
    for _ in 0..ops {
        let roll: f64 = rng.gen();
        if roll < 0.6 {
            let node = random_node(&g, &mut rng);
            let (n, c) = (g.node_count(), g.class_count());
            match g.add(node.clone()) {
                Ok(id) => {
                    adds += 1;
                    assert_eq!(g.add(node).unwrap(), id, "hashcons idempotence");
                }
                Err(_) => assert_eq!((g.node_count(), g.class_count()), (n, c), "rejected add changed the graph"),
            }
        } else if roll < 0.9 {
            if let Some((a, b)) = same_shape_partner(&g, &mut rng) {
                let r = g.union(a, b).unwrap();
                assert_eq!(g.find(a), r);
                assert_eq!(g.find(b), r);
                unions += 1;
            }
        } else {
            let before = g.node_count();
            g.rebuild().unwrap();
            assert!(g.node_count() <= before, "rebuild added nodes");
            g.check_invariants().unwrap();
            let dump = g.dump();
            g.rebuild().unwrap();
            assert_eq!(g.dump(), dump, "second rebuild changed the graph");
            rebuilds += 1;
        }
    }
    g.rebuild().unwrap();
    g.check_invariants().unwrap();
    (adds, unions, rebuilds)
}
