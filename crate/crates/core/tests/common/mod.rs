//! Shared helpers: random finite-difference checks for every differentiable
//! operation, and fixture paths.

#![allow(dead_code)]

use std::path::PathBuf;

use docdistill::corpus::LabelTarget;
use docdistill::distillation::{
    batch_loss, binary_cross_entropy_with_grad, combined_loss_with_grad, cross_entropy_with_grad, distill_with_grad,
    DistillConfig, KlDirection,
};
use docdistill::tensor::functional::softmax;
use docdistill::tensor::gradcheck::{check, compare, numeric_gradient, GradCheck, FD_EPS};
use docdistill::tensor::{lstm_cell, LstmVars, Tape, Tensor, Var};
use docdistill::TaskKind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INSTANCES: usize = 25;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn rng(op: u64, instance: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(op * 1000 + instance as u64)
}

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

/// Values at least 0.05 apart, so a finite-difference probe never changes
/// which element wins a max.
fn separated_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let mut v: Vec<f64> = (0..rows * cols).map(|i| i as f64 * 0.05 - 1.0).collect();
    v.shuffle(rng);
    Tensor::matrix(rows, cols, v).unwrap()
}

/// Checks the tape gradient of `Σ w ⊙ build(inputs)` for random weights `w`
/// against central differences over every input entry.
pub fn tape_check(
    inputs: &[Tensor],
    weight_rng: &mut ChaCha8Rng,
    build: impl Fn(&mut Tape, &[Var]) -> Var,
) -> GradCheck {
    let shapes: Vec<Vec<usize>> = inputs.iter().map(|t| t.shape().to_vec()).collect();
    let flat: Vec<f64> = inputs.iter().flat_map(|t| t.data().to_vec()).collect();
    let rebuild = |x: &[f64]| -> Vec<Tensor> {
        let mut at = 0;
        shapes
            .iter()
            .map(|s| {
                let n: usize = s.iter().product();
                let t = Tensor::new(s.clone(), x[at..at + n].to_vec()).unwrap();
                at += n;
                t
            })
            .collect()
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = build(&mut tape, &vars);
    let weights: Vec<f64> = (0..tape.value(out).numel()).map(|_| weight_rng.gen_range(-1.0..1.0)).collect();
    let s = tape.weighted_sum(out, &weights).unwrap();
    tape.backward(s).unwrap();
    let analytic: Vec<f64> = vars
        .iter()
        .flat_map(|&v| {
            tape.grad(v)
                .map(<[f64]>::to_vec)
                .unwrap_or_else(|| vec![0.0; tape.value(v).numel()])
        })
        .collect();

    let numeric = numeric_gradient(
        |x| {
            let mut tape = Tape::new();
            let vars: Vec<Var> = rebuild(x).into_iter().map(|t| tape.constant(t)).collect();
            let out = build(&mut tape, &vars);
            tape.value(out).data().iter().zip(&weights).map(|(a, b)| a * b).sum()
        },
        &flat,
        FD_EPS,
    );
    compare(&analytic, &numeric)
}

/// The operations covered by the gradient suite.
pub const OPS: [&str; 10] = [
    "matmul",
    "sigmoid",
    "tanh",
    "softmax",
    "lstm_cell",
    "pooling",
    "cross_entropy",
    "binary_cross_entropy",
    "kl",
    "combined",
];

fn kind_of(i: usize) -> TaskKind {
    if i.is_multiple_of(2) {
        TaskKind::MultiLabel
    } else {
        TaskKind::SingleLabel
    }
}

fn random_q(rng: &mut ChaCha8Rng, k: usize, kind: TaskKind) -> Vec<f64> {
    match kind {
        TaskKind::MultiLabel => (0..k).map(|_| rng.gen_range(0.02..0.98)).collect(),
        TaskKind::SingleLabel => {
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
            softmax(&raw).unwrap()
        }
    }
}

fn random_target(rng: &mut ChaCha8Rng, k: usize, kind: TaskKind) -> LabelTarget {
    match kind {
        TaskKind::MultiLabel => LabelTarget::MultiHot((0..k).map(|_| f64::from(rng.gen_bool(0.4))).collect()),
        TaskKind::SingleLabel => LabelTarget::Class(rng.gen_range(0..k)),
    }
}

/// Worst gradient check over one random instance of `op`.
pub fn check_instance(op: &str, instance: usize) -> GradCheck {
    let id = OPS.iter().position(|o| *o == op).expect("known op") as u64 + 1;
    let mut r = rng(id, instance);
    match op {
        "matmul" => {
            let (m, k, n) = (r.gen_range(1..5), r.gen_range(1..5), r.gen_range(1..5));
            let a = random_tensor(&mut r, m, k, 2.0);
            let b = random_tensor(&mut r, k, n, 2.0);
            tape_check(&[a, b], &mut r, |t, v| t.matmul(v[0], v[1]).unwrap())
        }
        "sigmoid" => {
            let rows = r.gen_range(1..4);
            let x = random_tensor(&mut r, rows, 3, 4.0);
            tape_check(&[x], &mut r, |t, v| t.sigmoid(v[0]))
        }
        "tanh" => {
            let rows = r.gen_range(1..4);
            let x = random_tensor(&mut r, rows, 3, 3.0);
            tape_check(&[x], &mut r, |t, v| t.tanh(v[0]))
        }
        "softmax" => {
            let k = r.gen_range(2..7);
            let z: Vec<f64> = (0..k).map(|_| r.gen_range(-3.0..3.0)).collect();
            let w: Vec<f64> = (0..k).map(|_| r.gen_range(-1.0..1.0)).collect();
            // f = Σ w_i softmax(z)_i; df/dz_j = s_j (w_j − Σ_i w_i s_i)
            check(
                |z| {
                    let s = softmax(z).unwrap();
                    let ws: f64 = s.iter().zip(&w).map(|(a, b)| a * b).sum();
                    (ws, s.iter().zip(&w).map(|(sj, wj)| sj * (wj - ws)).collect())
                },
                &z,
            )
        }
        "lstm_cell" => {
            let (b, e, h) = (r.gen_range(1..4), r.gen_range(1..5), r.gen_range(1..5));
            let inputs = [
                random_tensor(&mut r, b, e, 1.5),
                random_tensor(&mut r, b, h, 1.0),
                random_tensor(&mut r, b, h, 1.0),
                random_tensor(&mut r, e, 4 * h, 1.0),
                random_tensor(&mut r, h, 4 * h, 1.0),
                random_tensor(&mut r, 1, 4 * h, 0.5),
            ];
            tape_check(&inputs, &mut r, |t, v| {
                let p = LstmVars {
                    w_ih: v[3],
                    w_hh: v[4],
                    bias: v[5],
                };
                let (h, c) = lstm_cell(t, v[0], v[1], v[2], &p).unwrap();
                // Both outputs feed the projection.
                t.concat_cols(h, c).unwrap()
            })
        }
        "pooling" => {
            let (steps, b, d) = (r.gen_range(1..6), r.gen_range(1..4), r.gen_range(1..4));
            let lengths: Vec<usize> = (0..b).map(|_| r.gen_range(1..=steps)).collect();
            let all = separated_tensor(&mut r, steps * b, d);
            if instance.is_multiple_of(2) {
                tape_check(&[all], &mut r, |t, v| t.max_over_time(v[0]).unwrap())
            } else {
                tape_check(&[all], &mut r, move |t, v| {
                    let rows: Vec<Var> = (0..steps).map(|s| t.slice_rows(v[0], s * b, (s + 1) * b).unwrap()).collect();
                    t.masked_max_over_time(&rows, &lengths).unwrap()
                })
            }
        }
        "cross_entropy" => {
            let k = r.gen_range(2..7);
            let z: Vec<f64> = (0..k).map(|_| r.gen_range(-4.0..4.0)).collect();
            let c = r.gen_range(0..k);
            check(|z| cross_entropy_with_grad(z, c).unwrap(), &z)
        }
        "binary_cross_entropy" => {
            let k = r.gen_range(1..7);
            let z: Vec<f64> = (0..k).map(|_| r.gen_range(-4.0..4.0)).collect();
            let y: Vec<f64> = (0..k).map(|_| f64::from(r.gen_bool(0.5))).collect();
            check(|z| binary_cross_entropy_with_grad(z, &y).unwrap(), &z)
        }
        "kl" => {
            let kind = kind_of(instance);
            let k = r.gen_range(2..7);
            let z: Vec<f64> = (0..k).map(|_| r.gen_range(-3.0..3.0)).collect();
            let q = random_q(&mut r, k, kind);
            let cfg = DistillConfig {
                lambda: 1.0,
                temperature: r.gen_range(0.5..3.0),
                kl_direction: if instance % 4 < 2 {
                    KlDirection::StudentFirst
                } else {
                    KlDirection::TeacherFirst
                },
                kind,
            };
            check(|z| distill_with_grad(z, &q, &cfg).unwrap(), &z)
        }
        "combined" => {
            let kind = kind_of(instance);
            let (b, k) = (r.gen_range(1..4), r.gen_range(2..6));
            let logits = random_tensor(&mut r, b, k, 3.0);
            let targets: Vec<LabelTarget> = (0..b).map(|_| random_target(&mut r, k, kind)).collect();
            let qs: Vec<Vec<f64>> = (0..b).map(|_| random_q(&mut r, k, kind)).collect();
            let cfg = DistillConfig {
                lambda: [0.0, 1.0, 4.0, r.gen_range(0.0..5.0)][instance % 4],
                temperature: if instance.is_multiple_of(3) { 2.0 } else { 1.0 },
                kl_direction: KlDirection::StudentFirst,
                kind,
            };
            if instance.is_multiple_of(2) {
                // Single example through the scalar API.
                let row = logits.row(0).to_vec();
                check(|z| combined_loss_with_grad(z, &targets[0], Some(&qs[0]), &cfg).unwrap(), &row)
            } else {
                tape_check(&[logits], &mut r, |t, v| {
                    let tr: Vec<&LabelTarget> = targets.iter().collect();
                    let qr: Vec<&[f64]> = qs.iter().map(Vec::as_slice).collect();
                    batch_loss(t, v[0], &tr, Some(&qr), &cfg).unwrap()
                })
            }
        }
        other => panic!("unknown op {other}"),
    }
}

/// Runs [`INSTANCES`] random instances of `op` and returns the worst check.
pub fn check_op(op: &str) -> GradCheck {
    (0..INSTANCES)
        .map(|i| check_instance(op, i))
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .expect("at least one instance")
}
