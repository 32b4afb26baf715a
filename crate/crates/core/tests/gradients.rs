mod common;

use common::{check_instance, check_op, INSTANCES};

fn assert_op(op: &str) {
    let worst = check_op(op);
    assert!(worst.passed(), "{op}: {worst:?}");
}

#[test]
fn matmul_gradients() {
    assert_op("matmul");
}

#[test]
fn sigmoid_gradients() {
    assert_op("sigmoid");
}

#[test]
fn tanh_gradients() {
    assert_op("tanh");
}

#[test]
fn softmax_gradients() {
    assert_op("softmax");
}

#[test]
fn lstm_cell_gradients() {
    assert_op("lstm_cell");
}

#[test]
fn pooling_gradients() {
    assert_op("pooling");
}

#[test]
fn cross_entropy_gradients() {
    assert_op("cross_entropy");
}

#[test]
fn binary_cross_entropy_gradients() {
    assert_op("binary_cross_entropy");
}

#[test]
fn kl_gradients_both_kinds_and_directions() {
    assert_op("kl");
}

#[test]
fn combined_loss_gradients() {
    assert_op("combined");
}

#[test]
fn instances_are_distinct() {
    let a = check_instance("matmul", 0);
    let b = check_instance("matmul", 1);
    const { assert!(INSTANCES >= 20) };
    assert_ne!(a, b);
}

