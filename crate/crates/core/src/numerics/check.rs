use super::{NumericsError, Tape, Tensor, Var};

/// Near-zero gradient coordinates sit below the central-difference noise
/// floor; the denominator is clamped so they are judged absolutely.
const REL_DENOM_FLOOR: f64 = 1e-3;

/// Compare reverse-mode gradients against central finite differences.
///
/// `f` must be deterministic (dropout disabled) and rebuild the same
/// computation from whatever leaf values it is handed; the leaves are
/// registered in the order of `inputs`. Returns the max over all
/// coordinates of |analytic - numeric| / max(|analytic|, |numeric|, floor).
pub fn grad_check<F>(inputs: &[(String, Tensor)], f: F, eps: f64) -> Result<f64, NumericsError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, NumericsError>,
{
    let eval = |values: &[(String, Tensor)]| -> Result<f64, NumericsError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values
            .iter()
            .map(|(name, t)| tape.named_leaf(name, t.clone()))
            .collect();
        let loss = f(&mut tape, &vars)?;
        Ok(tape.value(loss).item())
    };

    // analytic pass
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|(name, t)| tape.named_leaf(name, t.clone()))
        .collect();
    let loss = f(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;

    let mut max_rel = 0.0_f64;
    for (k, (name, tensor)) in inputs.iter().enumerate() {
        let analytic = &grads[name];
        for j in 0..tensor.numel() {
            let mut plus = inputs.to_vec();
            plus[k].1.data[j] += eps;
            let mut minus = inputs.to_vec();
            minus[k].1.data[j] -= eps;
            let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * eps);
            let a = analytic.data[j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_DENOM_FLOOR);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_matches_to_machine_precision() {
        let inputs = vec![(
            "x".to_string(),
            Tensor::vector(vec![0.3, -1.2, 2.5, 0.0]),
        )];
        let err = grad_check(
            &inputs,
            |tape, vars| {
                let w = tape.constant(Tensor::vector(vec![2.0, -1.0, 0.5, 3.0]));
                tape.dot(vars[0], w)
            },
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-8, "linear grad check error {err}");
    }

    #[test]
    fn sigmoid_gradient_at_zero_is_quarter() {
        let inputs = vec![("x".to_string(), Tensor::scalar(0.0))];
        let mut tape = Tape::new();
        let x = tape.named_leaf("x", Tensor::scalar(0.0));
        let s = tape.sigmoid(x);
        let grads = tape.backward(s).unwrap();
        assert!((grads["x"].data[0] - 0.25).abs() < 1e-15);

        let err = grad_check(
            &inputs,
            |tape, vars| {
                let s = tape.sigmoid(vars[0]);
                Ok(tape.sum(s))
            },
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "sigmoid grad check error {err}");
    }

    #[test]
    fn tanh_sigmoid_chain_under_1e6() {
        let inputs = vec![(
            "x".to_string(),
            Tensor::vector(vec![0.4, -0.7, 1.3, -0.1, 0.9]),
        )];
        let err = grad_check(
            &inputs,
            |tape, vars| {
                let t = tape.tanh(vars[0]);
                let s = tape.sigmoid(t);
                let t2 = tape.tanh(s);
                Ok(tape.sum(t2))
            },
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "chain grad check error {err}");
    }

    #[test]
    fn matmul_sum_gradient_matches_finite_differences() {
        let inputs = vec![
            (
                "a".to_string(),
                Tensor::new(vec![2, 3], vec![0.5, -1.0, 2.0, 1.5, 0.25, -0.75]).unwrap(),
            ),
            (
                "b".to_string(),
                Tensor::new(vec![3, 2], vec![1.0, 2.0, -0.5, 0.75, 0.1, -1.25]).unwrap(),
            ),
        ];
        let err = grad_check(
            &inputs,
            |tape, vars| {
                let c = tape.matmul(vars[0], vars[1])?;
                Ok(tape.sum(c))
            },
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "matmul grad check error {err}");
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let inputs = vec![(
            "logits".to_string(),
            Tensor::vector(vec![0.3, -1.1, 0.8, 2.0, -0.4]),
        )];
        let err = grad_check(
            &inputs,
            |tape, vars| tape.cross_entropy(vars[0], 2),
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "cross-entropy grad check error {err}");
    }

    #[test]
    fn embedding_through_dot_matches_finite_differences() {
        let inputs = vec![
            (
                "table".to_string(),
                Tensor::new(vec![4, 2], vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8]).unwrap(),
            ),
            ("probe".to_string(), Tensor::vector(vec![1.5, -2.5])),
        ];
        let err = grad_check(
            &inputs,
            |tape, vars| {
                let row = tape.embedding_row(vars[0], 2)?;
                tape.dot(row, vars[1])
            },
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "embedding grad check error {err}");
    }

    #[test]
    fn softmax_weighted_sum_matches_finite_differences() {
        let inputs = vec![
            ("scores".to_string(), Tensor::vector(vec![0.2, -0.9, 1.4])),
            ("s0".to_string(), Tensor::vector(vec![1.0, -1.0])),
            ("s1".to_string(), Tensor::vector(vec![0.5, 2.0])),
            ("s2".to_string(), Tensor::vector(vec![-0.25, 0.75])),
        ];
        let err = grad_check(
            &inputs,
            |tape, vars| {
                let w = tape.softmax(vars[0]);
                let c = tape.weighted_sum(w, &vars[1..])?;
                let t = tape.tanh(c);
                Ok(tape.sum(t))
            },
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "attention-shaped grad check error {err}");
    }
}
