use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::NumericsError;

/// Dense row-major f64 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub requires_grad: bool,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NumericsError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NumericsError::ShapeDataMismatch {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Tensor {
            shape,
            data,
            requires_grad: false,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
            requires_grad: false,
        }
    }

    pub fn scalar(x: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![x],
            requires_grad: false,
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
            requires_grad: false,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// Scalar payload; panics on non-scalars (programmer error).
    pub fn item(&self) -> f64 {
        assert!(self.is_scalar(), "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Inverted-dropout mask: entries are 0 with probability `rate`, else
/// 1/(1-rate), so the expected value of each entry is 1 and inference
/// needs no rescaling.
pub fn dropout_mask(
    shape: &[usize],
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Tensor, NumericsError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NumericsError::InvalidDropoutRate(rate));
    }
    let n: usize = shape.iter().product();
    let keep_scale = 1.0 / (1.0 - rate);
    let data = (0..n)
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep_scale
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn shape_data_mismatch_is_rejected() {
        let err = Tensor::new(vec![2, 3], vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, NumericsError::ShapeDataMismatch { .. }));
    }

    #[test]
    fn dropout_rate_zero_is_identity_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mask = dropout_mask(&[40], 0.0, &mut rng).unwrap();
        assert!(mask.data.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn dropout_rate_one_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(dropout_mask(&[4], 1.0, &mut rng).is_err());
        assert!(dropout_mask(&[4], -0.1, &mut rng).is_err());
    }

    #[test]
    fn dropout_zero_fraction_concentrates_around_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mask = dropout_mask(&[10_000], 0.3, &mut rng).unwrap();
        let zeros = mask.data.iter().filter(|&&x| x == 0.0).count() as f64;
        let frac = zeros / 10_000.0;
        assert!((0.28..=0.32).contains(&frac), "zero fraction {frac}");
        // surviving entries carry the inverted-dropout scale
        let survivors: Vec<f64> = mask.data.iter().copied().filter(|&x| x != 0.0).collect();
        assert!(survivors.iter().all(|&x| (x - 1.0 / 0.7).abs() < 1e-15));
        // E[entry] == 1 by construction: zero*rate + (1/(1-rate))*(1-rate)
        let mean = mask.data.iter().sum::<f64>() / mask.data.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mask mean {mean}");
    }
}
