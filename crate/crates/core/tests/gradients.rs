mod common;

use common::*;
use neuroprune::grad2::second_order_backprop;
use neuroprune::train::first_order_weight_gradients;
use neuroprune::{LayerParams, Network};
use proptest::prelude::*;

fn check_case(seed: u64) -> std::result::Result<(), TestCaseError> {
    let (net, samples) = random_case(seed);
    let grads = second_order_backprop(&net, &samples).unwrap();
    for id in net.hidden_neurons() {
        let g = grads.get(id).unwrap();
        if net.gain(id).unwrap() == 0.0 {
            prop_assert!(g.g1 == 0.0 && g.g2 == 0.0 && g.delta_e2 == 0.0);
            continue;
        }
        let fd1 = fd_first(&net, &samples, id);
        prop_assert!(rel_err(g.g1, fd1, FLOOR1) <= 1e-5, "{id:?}: g1 {} vs fd {}", g.g1, fd1);
        let iso = fd_second_path_isolated(&net, &samples, id);
        prop_assert!(rel_err(g.g2, iso, FLOOR2) <= 1e-3, "{id:?}: g2 {} vs path fd {}", g.g2, iso);
        if id.layer == 1 {
            let fd2 = fd_second(&net, &samples, id);
            prop_assert!(rel_err(g.g2, fd2, FLOOR2) <= 1e-3, "{id:?}: g2 {} vs fd {}", g.g2, fd2);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn neuron_derivatives_match_finite_differences(seed in any::<u64>()) {
        check_case(seed)?;
    }

    #[test]
    fn taylor_estimates_are_per_sample_sums(seed in any::<u64>()) {
        let (net, samples) = random_case(seed);
        let grads = second_order_backprop(&net, &samples).unwrap();
        for id in net.hidden_neurons() {
            let (mut d1, mut d2) = (0.0, 0.0);
            for s in 0..samples.len() {
                let one = second_order_backprop(&net, &samples.slice(&[s])).unwrap().get(id).unwrap();
                let o = naive_activations(&net, samples.inputs.row(s))[id.layer][id.index];
                d1 += -o * one.g1;
                d2 += -o * one.g1 + 0.5 * o * o * one.g2;
            }
            let g = grads.get(id).unwrap();
            prop_assert!(rel_err(g.delta_e1, d1, 1e-12) < 1e-9, "{} vs {}", g.delta_e1, d1);
            prop_assert!(rel_err(g.delta_e2, d2, 1e-12) < 1e-9, "{} vs {}", g.delta_e2, d2);
        }
    }
}

#[test]
fn plain_and_path_isolated_second_differences_agree_on_the_last_hidden_layer() {
    for seed in 0..10 {
        let (net, samples) = random_case(seed);
        for id in net.hidden_neurons().filter(|id| id.layer == 1) {
            let a = fd_second(&net, &samples, id);
            let b = fd_second_path_isolated(&net, &samples, id);
            assert!(rel_err(a, b, FLOOR2) < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn weight_gradients_match_finite_differences() {
    let (net, samples) = random_case(7);
    let grads = first_order_weight_gradients(&net, &samples).unwrap();
    let mut checked = 0;
    for m in 0..net.layer_count() {
        let l = net.layer(m);
        for w in 0..l.weights().len() {
            if (m * 31 + w * 7) % 3 != 0 || checked == 50 {
                continue;
            }
            let bump = |h: f64| {
                let mut weights = l.weights().to_vec();
                weights[w] += h;
                let mut layers = net.layers().to_vec();
                layers[m] = LayerParams::with_gains(l.fan_in(), weights, l.biases().to_vec(), l.gains().to_vec()).unwrap();
                naive_error(&Network::from_layers(net.input_dim(), layers, 0).unwrap(), &samples)
            };
            let fd = (bump(H1) - bump(-H1)) / (2.0 * H1);
            let got = grads.weights[m][w];
            assert!(rel_err(got, fd, 1e-6) < 1e-5, "layer {m} weight {w}: {got} vs {fd}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}
