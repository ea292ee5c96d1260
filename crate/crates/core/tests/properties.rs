mod common;

use common::*;
use neuroprune::data::Samples;
use neuroprune::model_io::{deserialize, serialize};
use neuroprune::net::{sigmoid, sigmoid_double_prime, sigmoid_prime, GainProbe};
use neuroprune::pruning::delta_e_brute_force;
use neuroprune::NeuronId;
use proptest::prelude::*;
use proptest::sample::subsequence;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn forward_matches_the_naive_oracle(seed in any::<u64>()) {
        let (net, samples) = random_case(seed);
        for x in samples.inputs.iter_rows() {
            let got = net.predict(x).unwrap();
            let want = naive_forward(&net, x, &|_, _, o| o);
            prop_assert!(got.iter().zip(&want).all(|(a, b)| close(*a, *b)), "{got:?} vs {want:?}");
        }
        prop_assert!(close(net.evaluate(&samples).unwrap().squared_error, naive_error(&net, &samples)));
    }

    #[test]
    fn pruned_and_compacted_networks_agree(seed in any::<u64>(), pick in subsequence((0..30usize).collect::<Vec<_>>(), 0..30)) {
        let (mut net, samples) = random_case(seed);
        let ids: Vec<NeuronId> = net.hidden_neurons().collect();
        for k in pick.into_iter().filter(|&k| k < ids.len()) {
            net.prune(ids[k]).unwrap();
        }
        let small = net.compact();
        prop_assert_eq!(small.hidden_neuron_count(), net.active_hidden_count());
        for x in samples.inputs.iter_rows() {
            let (a, b) = (net.predict(x).unwrap(), small.predict(x).unwrap());
            prop_assert!(a.iter().zip(&b).all(|(p, q)| close(*p, *q)), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn error_is_additive_over_samples(seed in any::<u64>()) {
        let (net, samples) = random_case(seed);
        let n = samples.len();
        let cut = n / 2;
        let first: Vec<usize> = (0..cut).collect();
        let rest: Vec<usize> = (cut..n).collect();
        let whole = net.evaluate(&samples).unwrap().squared_error;
        let parts = part_error(&net, &samples.slice(&first)) + part_error(&net, &samples.slice(&rest));
        prop_assert!(close(whole, parts));
    }

    #[test]
    fn gain_probe_is_bitwise_a_full_evaluation(seed in any::<u64>(), alpha in 0.0f64..2.0) {
        let (net, samples) = random_case(seed);
        let probe = GainProbe::new(&net, &samples).unwrap();
        prop_assert_eq!(probe.baseline(), net.evaluate(&samples).unwrap());
        for id in net.active_hidden_neurons() {
            let mut copy = net.clone();
            copy.set_gain(id, alpha).unwrap();
            prop_assert_eq!(probe.evaluate(id, alpha).unwrap(), copy.evaluate(&samples).unwrap());
        }
    }

    #[test]
    fn brute_force_delta_is_the_realized_change(seed in any::<u64>()) {
        let (net, samples) = random_case(seed);
        let base = net.evaluate(&samples).unwrap().squared_error;
        for e in delta_e_brute_force(&net, &samples).unwrap() {
            let mut copy = net.clone();
            copy.prune(e.neuron).unwrap();
            prop_assert_eq!(e.delta_e.to_bits(), (copy.evaluate(&samples).unwrap().squared_error - base).to_bits());
        }
    }

    #[test]
    fn serialization_round_trips_exactly(seed in any::<u64>()) {
        let (net, samples) = random_case(seed);
        let back = deserialize(&serialize(&net)).unwrap();
        prop_assert_eq!(serialize(&back), serialize(&net));
        prop_assert_eq!(back.evaluate(&samples).unwrap(), net.evaluate(&samples).unwrap());
    }
}

fn part_error(net: &neuroprune::Network, s: &Samples) -> f64 {
    if s.is_empty() {
        0.0
    } else {
        net.evaluate(s).unwrap().squared_error
    }
}

#[test]
fn sigmoid_identities_hold_on_a_dense_grid() {
    for k in 0..10_000 {
        let x = -30.0 + 60.0 * k as f64 / 9_999.0;
        let s = sigmoid(x);
        assert!(close(s + sigmoid(-x), 1.0), "x = {x}");
        assert!(close(sigmoid_prime(s), s * (1.0 - s)));
        assert!(close(sigmoid_double_prime(s), s * (1.0 - s) * (1.0 - 2.0 * s)));
        let h = 1e-5;
        let fd = (sigmoid(x + h) - sigmoid(x - h)) / (2.0 * h);
        assert!((fd - sigmoid_prime(s)).abs() < 1e-9, "x = {x}");
    }
}
