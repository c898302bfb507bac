#![allow(dead_code)]

use qnt_core::oracle::{self, KrausChannel, SingleGate, Unitary};
use qnt_core::pauli::{PauliChannel, PauliVector1Q, PauliVector2Q, Qubit};
use qnt_core::network::{NodeKind, Topology};
use rand::Rng;

/// Random CP Pauli channel; each error probability is zeroed with chance 1/3
/// so that bypassable channels show up regularly.
pub fn random_channel<R: Rng>(rng: &mut R) -> PauliChannel {
    let mut w: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
    for x in w.iter_mut().skip(1) {
        if rng.random_range(0..3) == 0 {
            *x = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    PauliChannel::from_probabilities(w[1] / total, w[2] / total, w[3] / total).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R) -> PauliVector1Q {
    let mut r: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1.0 {
        let scale = rng.random::<f64>() / norm;
        r.iter_mut().for_each(|x| *x *= scale);
    }
    PauliVector1Q::new([1.0, r[0], r[1], r[2]])
}

pub fn random_qubit<R: Rng>(rng: &mut R) -> Qubit {
    if rng.random_bool(0.5) {
        Qubit::First
    } else {
        Qubit::Second
    }
}

/// One step of a two-qubit pipeline, applied both ways.
#[derive(Debug, Clone, Copy)]
pub enum Step {
    Channel(PauliChannel, Qubit),
    Gate(qnt_core::pauli::Gate, Qubit),
    Cnot(Qubit),
}

pub fn random_step<R: Rng>(rng: &mut R) -> Step {
    use qnt_core::pauli::Gate;
    match rng.random_range(0..5) {
        0 | 1 => Step::Channel(random_channel(rng), random_qubit(rng)),
        2 => Step::Gate(
            [Gate::Hadamard, Gate::Phase, Gate::HadamardPhase][rng.random_range(0..3)],
            random_qubit(rng),
        ),
        _ => Step::Cnot(random_qubit(rng)),
    }
}

pub fn apply_pauli(v: &PauliVector2Q, step: Step) -> PauliVector2Q {
    match step {
        Step::Channel(c, q) => v.apply_local(&c.ptm(), q),
        Step::Gate(g, q) => v.apply_local(&g.ptm().unwrap(), q),
        Step::Cnot(c) => qnt_core::pauli::apply_cnot(v, c),
    }
}

pub fn apply_oracle(rho: &oracle::DensityMatrix, step: Step) -> oracle::DensityMatrix {
    use qnt_core::pauli::Gate;
    match step {
        Step::Channel(c, q) => {
            let k = KrausChannel::pauli(&c).on_qubit(q).unwrap();
            oracle::evolve_kraus(rho, &k).unwrap()
        }
        Step::Gate(g, q) => {
            let sg = match g {
                Gate::Hadamard => SingleGate::H,
                Gate::Phase => SingleGate::S,
                Gate::HadamardPhase => SingleGate::HadamardPhase,
                _ => unreachable!(),
            };
            oracle::evolve_unitary(rho, Unitary::Local(sg, q)).unwrap()
        }
        Step::Cnot(c) => oracle::evolve_unitary(rho, Unitary::Cnot { control: c }).unwrap(),
    }
}

/// The bundled network with each edge split into one to three random channels.
pub fn subdivided_two_ring(rng: &mut impl Rng) -> Topology {
    let base = Topology::two_ring();
    let mut t = Topology::new();
    for n in base.node_ids() {
        t.add_node(&base.node(n).name, base.node(n).kind).unwrap();
    }
    for e in base.edge_ids() {
        let edge = base.edge(e);
        let (a, b) = (&base.node(edge.ends.0).name, &base.node(edge.ends.1).name);
        let pieces = rng.random_range(1..=3);
        let mut prev = a.clone();
        for k in 0..pieces {
            let next = if k + 1 == pieces {
                b.clone()
            } else {
                let name = format!("{}_{}", edge.name, k);
                t.add_node(&name, NodeKind::Internal).unwrap();
                name
            };
            let name = if pieces == 1 { edge.name.clone() } else { format!("{}.{}", edge.name, k) };
            t.add_edge(&name, &prev, &next, random_channel(rng)).unwrap();
            prev = next;
        }
    }
    t
}
