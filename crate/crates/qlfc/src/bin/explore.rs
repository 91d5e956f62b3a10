// scratch exploration binary - not part of the deliverable
use qlfc::expert::{
    build_lookup_table, generate_replay, CostKind, GainGrid, ReplayConfig, Scenario,
};
use qlfc::plant::{LoadEvent, PlantParams, SimSettings};
use qlfc::vqc::{AnsatzSpec, Backend, FeatureMapSpec, FeatureWindow, VqcModel, VqcParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn structures(s: f64) -> Vec<Vec<(f64, f64)>> {
    vec![
        vec![(10.0, 0.7 * s)],
        vec![(10.0, -0.7 * s)],
        vec![(10.0, 1.0 * s)],
        vec![(10.0, 1.4 * s)],
        vec![(10.0, -1.4 * s)],
        vec![(21.0, 0.7 * s)],
        vec![(21.0, -1.2 * s)],
        vec![(10.0, 0.7 * s), (21.0, -0.7 * s)],
        vec![(10.0, 1.0 * s), (21.0, -0.7 * s)],
        vec![(10.0, 0.7 * s), (21.0, -1.0 * s)],
        vec![(10.0, 1.4 * s), (21.0, -1.0 * s)],
        vec![(10.0, -1.0 * s), (21.0, 1.4 * s)],
        vec![(10.0, 0.7 * s), (21.0, 0.7 * s)],
        vec![(10.0, -0.7 * s), (21.0, -0.7 * s)],
        vec![(10.0, 1.05 * s), (21.0, 0.7 * s)],
        vec![(10.0, -1.05 * s), (21.0, -0.7 * s)],
    ]
}

fn catalog(bands: &[(f64, f64)]) -> Vec<Scenario> {
    let mut scenarios = Vec::new();
    let mut id = 0;
    for &(h, s) in bands {
        for steps in &structures(s) {
            scenarios.push(Scenario {
                event: LoadEvent::new(id, steps.clone()),
                plant: PlantParams {
                    inertia: h,
                    ..PlantParams::default()
                },
            });
            id += 1;
        }
    }
    scenarios
}

fn split_by_event(
    samples: &[(FeatureWindow, usize, u32)],
    n_test: usize,
    seed: u64,
) -> (Vec<(FeatureWindow, usize)>, Vec<(FeatureWindow, usize)>) {
    let mut ids: Vec<u32> = samples.iter().map(|s| s.2).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let test_ids: Vec<u32> = ids[..n_test].to_vec();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (w, c, id) in samples {
        if test_ids.contains(id) {
            test.push((*w, *c));
        } else {
            train.push((*w, *c));
        }
    }
    (train, test)
}

fn accuracy(model: &VqcModel, set: &[(FeatureWindow, usize)], backend: Backend) -> f64 {
    let correct = set
        .iter()
        .filter(|(w, c)| model.predict_class(w, backend).unwrap() == *c)
        .count();
    correct as f64 / set.len() as f64
}

fn run_design(
    name: &str,
    bands: &[(f64, f64)],
    fs_list: &[f64],
    layers_list: &[usize],
    period: f64,
    capture: f64,
    reps_list: &[usize],
) {
    let grid = GainGrid {
        kp_values: vec![0.5, 2.0, 8.0, 24.0],
        ki_values: vec![2.0, 6.0, 18.0],
    };
    let sim = SimSettings {
        duration_s: 60.0,
        dt_s: 1e-3,
    };
    let scenarios = catalog(bands);
    let ta = build_lookup_table(&scenarios, &grid, CostKind::Ise, &sim).unwrap();
    let mut counts = vec![0usize; ta.table.n_classes()];
    for &c in &ta.classes {
        counts[c] += 1;
    }
    println!("=== design {name}: table {:?} counts {counts:?} ===", ta.table.entries());

    let memory = generate_replay(
        &scenarios,
        &ta.classes,
        &ta.table,
        &grid,
        CostKind::Ise,
        &sim,
        &ReplayConfig {
            sampling_period_s: period,
            capture_duration_s: capture,
        },
    )
    .unwrap();
    let tagged: Vec<(FeatureWindow, usize, u32)> = memory
        .samples
        .iter()
        .map(|s| (s.window, s.target_class, s.event_id))
        .collect();
    let (train_set, test_set) = split_by_event(&tagged, 18, 42);
    println!("{} train / {} test", train_set.len(), test_set.len());
    let test_ids: Vec<u32> = {
        let mut ids: Vec<u32> = tagged.iter().map(|s| s.2).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        ids.shuffle(&mut rng);
        ids[..18].to_vec()
    };
    let test_with_ids: Vec<(FeatureWindow, usize, u32)> = tagged
        .iter()
        .filter(|s| test_ids.contains(&s.2))
        .cloned()
        .collect();

    let configs: Vec<(f64, usize, usize, u64)> = fs_list
        .iter()
        .flat_map(|&fs| {
            layers_list.iter().flat_map(move |&l| {
                reps_list
                    .iter()
                    .flat_map(move |&r| [1u64].iter().map(move |&seed| (fs, l, r, seed)))
            })
        })
        .collect();
    let results: Vec<String> = configs
        .par_iter()
        .map(|&(fs, layers, reps, seed)| {
            let fm = FeatureMapSpec {
                n_qubits: 3,
                full_scale_hz: fs,
                repetitions: reps,
            };
            let ansatz = AnsatzSpec::linear(layers);
            let params = VqcParams::random(&ansatz, 3, seed);
            let mut model = VqcModel::new(fm, ansatz, params, ta.table.n_classes());
            let lr = 0.3;
            for _ in 0..2500 {
                let grad = model.parameter_shift_gradient(&train_set).unwrap();
                for (p, g) in model.params.0.iter_mut().zip(&grad) {
                    *p -= lr * g;
                }
            }
            let loss = model.loss(&train_set).unwrap();
            let train_acc = accuracy(&model, &train_set, Backend::Exact);
            let test_acc = accuracy(&model, &test_set, Backend::Exact);
            let shots_acc = accuracy(
                &model,
                &test_set,
                Backend::Shots {
                    shots: 1000,
                    seed: 7,
                },
            );
            let shots100 = accuracy(
                &model,
                &test_set,
                Backend::Shots { shots: 100, seed: 11 },
            );
            let mut errors = String::new();
            let mut err_events: Vec<u32> = Vec::new();
            for (w, c, id) in &test_with_ids {
                let pred = model.predict_class(w, Backend::Exact).unwrap();
                if pred != *c {
                    if !err_events.contains(id) {
                        err_events.push(*id);
                    }
                    errors.push_str(&format!(
                        "\n   err ev{id} true {c} pred {pred} [{:+.3} {:+.3} {:+.3}]",
                        w.0[0], w.0[1], w.0[2]
                    ));
                }
            }
            format!(
                "{name} fs={fs} L={layers} reps={reps} seed={seed}: loss={loss:.4} train={train_acc:.3} test={test_acc:.3} shots1k={shots_acc:.3} shots100={shots100:.3} err_events={}{errors}",
                err_events.len()
            )
        })
        .collect();
    for r in results {
        println!("{r}");
    }
}

fn main() {
    let bands = [
        (3.4, 0.18),
        (3.6, 0.18),
        (3.8, 0.18),
        (10.0, 0.072),
        (12.0, 0.072),
        (14.0, 0.072),
    ];
    run_design("p15", &bands, &[8.0, 11.0], &[4], 0.15, 1.2, &[1, 2]);
    run_design("p20", &bands, &[8.0, 11.0], &[4], 0.2, 1.6, &[1, 2]);
}
