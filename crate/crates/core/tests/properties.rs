//! Property tests for module invariants.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use tdsnn::io::{firing_rate, parse_config, Config};
use tdsnn::network::Polarity;
use tdsnn::neuron::{neuron_step, NeuronParams, NeuronState};
use tdsnn::reservoir::{rls_update, RlsState};
use tdsnn::scenarios::{Bench, NeuronDrive};
use tdsnn::synapse::{osc_frequency, steady_state_frequency, synapse_step, SynapseParams, SynapseState};
use tdsnn::weight::{merge_or, Pulse, PulseTrain, WeightCode};

fn arb_neuron() -> impl Strategy<Value = NeuronParams> {
    (0.1f64..1.0, 10.0f64..500.0, 0.0f64..2000.0, 0.0f64..3000.0).prop_map(|(v_th, r_base, r_exc, r_inh)| {
        NeuronParams {
            v_th,
            r_base,
            r_exc,
            r_inh,
            ..NeuronParams::default()
        }
    })
}

fn arb_synapse() -> impl Strategy<Value = SynapseParams> {
    (0.01f64..1.0, 1e-3f64..0.5, 0.0f64..0.9, 1.0f64..100.0, 0.0f64..1900.0).prop_map(
        |(delta_up, tau_leak, v_osc, f_min, span)| SynapseParams {
            delta_up,
            tau_leak,
            v_osc,
            f_min,
            f_max: f_min + span,
            ..SynapseParams::default()
        },
    )
}

fn arb_train() -> impl Strategy<Value = PulseTrain> {
    prop::collection::vec((1u32..400, 1u32..300), 0..20).prop_map(|gw| {
        let mut t = 0.0;
        let pulses = gw
            .into_iter()
            .map(|(gap, width)| {
                let rise = t + f64::from(gap) * 1e-5;
                let width = f64::from(width.min(gap)) * 1e-5 * 0.9;
                t = rise + width;
                Pulse { rise, width }
            })
            .collect();
        PulseTrain::new(pulses).expect("generated pulses do not overlap")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn membrane_stays_in_range(p in arb_neuron(), levels in prop::collection::vec((any::<bool>(), any::<bool>()), 1..2000)) {
        let dt = 10e-6;
        let mut st = NeuronState::default();
        for (k, &(exc, inh)) in levels.iter().enumerate() {
            let (next, _) = neuron_step(&st, &p, exc, inh, k as f64 * dt, dt).unwrap();
            prop_assert!(next.v_mem >= 0.0 && next.v_mem < p.v_th, "{}", next.v_mem);
            st = next;
        }
    }

    #[test]
    fn neuron_is_deterministic(p in arb_neuron(), levels in prop::collection::vec((any::<bool>(), any::<bool>()), 1..500)) {
        let dt = 10e-6;
        let run = || {
            let mut st = NeuronState::default();
            levels.iter().enumerate().map(|(k, &(e, i))| {
                let (next, fired) = neuron_step(&st, &p, e, i, k as f64 * dt, dt).unwrap();
                st = next;
                (next.v_mem.to_bits(), fired)
            }).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn osc_frequency_monotone_and_ranged(p in arb_synapse(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (f_lo, f_hi) = (osc_frequency(lo, &p), osc_frequency(hi, &p));
        prop_assert!(f_lo <= f_hi);
        for f in [f_lo, f_hi] {
            prop_assert!(f == 0.0 || (p.f_min..=p.f_max).contains(&f), "{f}");
        }
    }

    #[test]
    fn synapse_bounded_and_decays(p in arb_synapse(), spikes in prop::collection::vec(any::<bool>(), 1..3000)) {
        let dt = (0.4 / p.f_max).min(10e-6);
        let mut st = SynapseState::default();
        for &s in &spikes {
            let (next, _) = synapse_step(&st, &p, s, dt).unwrap();
            prop_assert!((0.0..=p.v_max).contains(&next.v_syn));
            prop_assert!((0.0..1.0).contains(&next.phase));
            if !s && st.v_syn > 0.0 {
                prop_assert!(next.v_syn < st.v_syn);
            }
            st = next;
        }
    }

    #[test]
    fn steady_state_nondecreasing_in_rate(p in arb_synapse(), a in 0.0f64..1000.0, b in 0.0f64..1000.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let f_lo = steady_state_frequency(lo, &p).unwrap();
        let f_hi = steady_state_frequency(hi, &p).unwrap();
        prop_assert!(f_lo <= f_hi + 1e-9 * f_hi.abs(), "{f_lo} > {f_hi}");
    }

    #[test]
    fn merge_or_associative(a in arb_train(), b in arb_train(), c in arb_train()) {
        let left = merge_or(&[merge_or(&[a.clone(), b.clone()]), c.clone()]);
        let right = merge_or(&[a.clone(), merge_or(&[b.clone(), c.clone()])]);
        let flat = merge_or(&[a, b, c]);
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(&left, &flat);
    }

    #[test]
    fn firing_rate_linear_in_count(times in prop::collection::vec(0.0f64..1.0, 0..300), copies in 1usize..4) {
        let once = firing_rate(&times, 0.1, 10, 1.0).unwrap();
        let repeated: Vec<f64> = times.iter().flat_map(|&t| std::iter::repeat_n(t, copies)).collect();
        let many = firing_rate(&repeated, 0.1, 10, 1.0).unwrap();
        prop_assert!((many - copies as f64 * once).abs() <= 1e-9 * many.max(1.0));
    }

    #[test]
    fn rls_matches_ridge(dim in 1usize..8, samples in 1usize..60, log_alpha in -2.0f64..2.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let alpha = 10f64.powf(log_alpha);
        let xs: Vec<Vec<f64>> = (0..samples).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<f64> = (0..samples).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut rls = RlsState::new(dim, alpha).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            let z: f64 = x.iter().zip(&rls.w).map(|(a, b)| a * b).sum();
            rls_update(&mut rls, x, z, y).unwrap();
        }
        let x = DMatrix::from_fn(samples, dim, |i, j| xs[i][j]);
        let lhs = x.transpose() * &x + DMatrix::identity(dim, dim) * alpha;
        let oracle = lhs.cholesky().unwrap().solve(&(x.transpose() * DVector::from_column_slice(&ys)));
        for (a, b) in rls.w.iter().zip(oracle.iter()) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
        }
        prop_assert!(rls.asymmetry() <= 1e-9);
    }

    #[test]
    fn config_round_trips(
        n in 1usize..200,
        seed in any::<u64>(),
        p in arb_neuron(),
        delta_up in 0.01f64..1.0,
        tau_leak in 1e-3f64..0.5,
        alpha in 0.01f64..100.0,
        teacher in any::<bool>(),
    ) {
        let mut c = Config::default();
        c.network.n_neurons = n;
        c.network.rng_seed = seed;
        c.neuron = p;
        c.synapse.delta_up = delta_up;
        c.synapse.tau_leak = tau_leak;
        c.train.rls_init_alpha = alpha;
        c.train.teacher_forcing = teacher;
        let text = c.to_toml().unwrap();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rate_monotone_in_pulse_width(freq in 20.0f64..300.0, a in 0u8..16, b in 0u8..16) {
        let (lo, hi) = (WeightCode::new(a.min(b)).unwrap(), WeightCode::new(a.max(b)).unwrap());
        let bench = Bench::default();
        let count = |polarity, code| bench
            .neuron_spikes(&NeuronDrive { polarity: Some(polarity), input_freq: freq, code }, 1.0)
            .unwrap()
            .len();
        prop_assert!(count(Polarity::Excitatory, lo) <= count(Polarity::Excitatory, hi));
        prop_assert!(count(Polarity::Inhibitory, lo) >= count(Polarity::Inhibitory, hi));
    }
}
