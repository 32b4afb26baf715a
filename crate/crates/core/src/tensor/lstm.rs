use super::{Tape, Var};
use crate::error::{Error, Result};

/// Gate order inside the packed `4h` dimension.
pub const GATES: [&str; 4] = ["input", "forget", "cell", "output"];

/// One direction's LSTM parameters, registered on a tape.
///
/// `w_ih` is `e×4h`, `w_hh` is `h×4h` and `bias` is `1×4h`, with gate blocks
/// laid out as (input, forget, cell, output).
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub w_ih: Var,
    pub w_hh: Var,
    pub bias: Var,
}

/// Full LSTM cell: projects `x` then runs [`lstm_step`].
pub fn lstm_cell(tape: &mut Tape, x: Var, h_prev: Var, c_prev: Var, params: &LstmVars) -> Result<(Var, Var)> {
    let hidden = tape.value(h_prev).cols();
    if tape.value(params.w_ih).cols() != 4 * hidden {
        return Err(Error::dim(format!(
            "w_ih {:?} is not e×4h for h = {hidden}",
            tape.value(params.w_ih).shape()
        )));
    }
    let proj = tape.matmul(x, params.w_ih)?;
    let proj = tape.add_row_bias(proj, params.bias)?;
    lstm_step(tape, proj, h_prev, c_prev, params.w_hh)
}

/// Recurrent half of the cell, given the already biased input projection
/// `x_proj` (`B×4h`):
///
/// ```text
/// z = x_proj + h_prev·W_hh
/// i, f, o = σ(z_i), σ(z_f), σ(z_o);  g = tanh(z_g)
/// c = f⊙c_prev + i⊙g;  h = o⊙tanh(c)
/// ```
pub fn lstm_step(tape: &mut Tape, x_proj: Var, h_prev: Var, c_prev: Var, w_hh: Var) -> Result<(Var, Var)> {
    let hidden = tape.value(h_prev).cols();
    if tape.value(c_prev).shape() != tape.value(h_prev).shape() {
        return Err(Error::dim("lstm: h_prev and c_prev shapes differ"));
    }
    let rec = tape.matmul(h_prev, w_hh)?;
    let z = tape.add(x_proj, rec)?;
    let zi = tape.slice_cols(z, 0, hidden)?;
    let zf = tape.slice_cols(z, hidden, 2 * hidden)?;
    let zg = tape.slice_cols(z, 2 * hidden, 3 * hidden)?;
    let zo = tape.slice_cols(z, 3 * hidden, 4 * hidden)?;
    let i = tape.sigmoid(zi);
    let f = tape.sigmoid(zf);
    let g = tape.tanh(zg);
    let o = tape.sigmoid(zo);
    let keep = tape.mul(f, c_prev)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok((h, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::functional::sigmoid;
    use crate::tensor::Tensor;

    #[test]
    fn zero_parameters_give_zero_state() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::matrix(2, 3, vec![0.5, -1.0, 2.0, 1.0, 1.0, 1.0]).unwrap());
        let h0 = tape.constant(Tensor::zeros(&[2, 4]));
        let c0 = tape.constant(Tensor::zeros(&[2, 4]));
        let p = LstmVars {
            w_ih: tape.param(Tensor::zeros(&[3, 16])),
            w_hh: tape.param(Tensor::zeros(&[4, 16])),
            bias: tape.param(Tensor::zeros(&[1, 16])),
        };
        let (h, c) = lstm_cell(&mut tape, x, h0, c0, &p).unwrap();
        assert!(tape.value(h).data().iter().all(|&v| v == 0.0));
        assert!(tape.value(c).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 3]));
        let h0 = tape.constant(Tensor::zeros(&[1, 4]));
        let c0 = tape.constant(Tensor::zeros(&[1, 4]));
        let p = LstmVars {
            w_ih: tape.param(Tensor::zeros(&[3, 12])),
            w_hh: tape.param(Tensor::zeros(&[4, 16])),
            bias: tape.param(Tensor::zeros(&[1, 16])),
        };
        assert!(matches!(lstm_cell(&mut tape, x, h0, c0, &p), Err(Error::Dimension(_))));
    }

    /// Scalar (e = h = 1) LSTM unrolled by hand with explicit BPTT.
    #[test]
    fn three_step_unroll_matches_manual_chain_rule() {
        let xs = [0.7, -0.4, 1.3];
        // Per-gate (w_ih, w_hh, b) for input, forget, cell, output.
        let wi = [0.3, -0.2, 0.5, 0.1];
        let wh = [0.4, 0.25, -0.6, 0.9];
        let b = [0.05, 1.0, -0.1, 0.2];

        // Manual forward.
        let mut hs = vec![0.0];
        let mut cs = vec![0.0];
        let mut gates = Vec::new();
        for &x in &xs {
            let h = *hs.last().unwrap();
            let c = *cs.last().unwrap();
            let z: Vec<f64> = (0..4).map(|k| wi[k] * x + wh[k] * h + b[k]).collect();
            let (i, f, g, o) = (sigmoid(z[0]), sigmoid(z[1]), z[2].tanh(), sigmoid(z[3]));
            let cn = f * c + i * g;
            hs.push(o * cn.tanh());
            cs.push(cn);
            gates.push((i, f, g, o));
        }
        // Loss = h_3. Manual backward through time.
        let (mut dwi, mut dwh, mut db) = ([0.0; 4], [0.0; 4], [0.0; 4]);
        let (mut dh, mut dc) = (1.0, 0.0);
        for t in (0..3).rev() {
            let (i, f, g, o) = gates[t];
            let c = cs[t + 1];
            let tc = c.tanh();
            let do_ = dh * tc;
            dc += dh * o * (1.0 - tc * tc);
            let di = dc * g;
            let df = dc * cs[t];
            let dg = dc * i;
            let dz = [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do_ * o * (1.0 - o)];
            for k in 0..4 {
                dwi[k] += dz[k] * xs[t];
                dwh[k] += dz[k] * hs[t];
                db[k] += dz[k];
            }
            dh = (0..4).map(|k| dz[k] * wh[k]).sum();
            dc *= f;
        }

        let mut tape = Tape::new();
        let p = LstmVars {
            w_ih: tape.param(Tensor::matrix(1, 4, wi.to_vec()).unwrap()),
            w_hh: tape.param(Tensor::matrix(1, 4, wh.to_vec()).unwrap()),
            bias: tape.param(Tensor::matrix(1, 4, b.to_vec()).unwrap()),
        };
        let mut h = tape.constant(Tensor::zeros(&[1, 1]));
        let mut c = tape.constant(Tensor::zeros(&[1, 1]));
        for &x in &xs {
            let xv = tape.constant(Tensor::scalar(x));
            let xv = tape.slice_cols(xv, 0, 1).unwrap();
            (h, c) = lstm_cell(&mut tape, xv, h, c, &p).unwrap();
        }
        assert!((tape.value(h).data()[0] - hs[3]).abs() < 1e-15);
        let loss = tape.sum(h);
        tape.backward(loss).unwrap();
        for k in 0..4 {
            assert!((tape.grad(p.w_ih).unwrap()[k] - dwi[k]).abs() < 1e-14);
            assert!((tape.grad(p.w_hh).unwrap()[k] - dwh[k]).abs() < 1e-14);
            assert!((tape.grad(p.bias).unwrap()[k] - db[k]).abs() < 1e-14);
        }
    }
}
