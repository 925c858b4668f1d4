//! Flatten-and-project head over the patch positions of the backbone output.

use crate::error::{Error, Result};
use crate::numerics::{uniform_matrix, Matrix, SeededRng, Tape, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionHead {
    /// `H × k·d_llm`.
    pub weight: Matrix,
    /// `1 × H`.
    pub bias: Matrix,
    pub patch_count: usize,
}

pub struct BoundHead {
    pub weight: Var,
    pub bias: Var,
    pub patch_count: usize,
}

impl ProjectionHead {
    pub fn init(horizon: usize, patch_count: usize, d_llm: usize, rng: &mut SeededRng) -> Self {
        let fan_in = patch_count * d_llm;
        let bound = 1.0 / (fan_in as f64).sqrt();
        ProjectionHead {
            weight: uniform_matrix(rng, horizon, fan_in, bound),
            bias: uniform_matrix(rng, 1, horizon, bound),
            patch_count,
        }
    }

    pub fn param_count(horizon: usize, patch_count: usize, d_llm: usize) -> usize {
        horizon * patch_count * d_llm + horizon
    }

    pub fn horizon(&self) -> usize {
        self.weight.rows()
    }

    pub fn bind<'a>(&'a self, tape: &mut Tape<'a>, trainable: bool) -> BoundHead {
        let (weight, bias) = if trainable {
            (tape.param(&self.weight), tape.param(&self.bias))
        } else {
            (tape.constant(&self.weight), tape.constant(&self.bias))
        };
        BoundHead {
            weight,
            bias,
            patch_count: self.patch_count,
        }
    }

    /// Forecast from the backbone output `o`, using only its last `k` rows.
    pub fn project(&self, o: &Matrix) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let ov = tape.constant(o);
        let out = bound.forward(&mut tape, ov)?;
        Ok(tape.value(out).data().to_vec())
    }
}

impl BoundHead {
    /// `1 × H` forecast row.
    pub fn forward(&self, tape: &mut Tape<'_>, o: Var) -> Result<Var> {
        let (rows, d) = tape.value(o).shape();
        let k = self.patch_count;
        if rows < k {
            return Err(Error::shape(format!("backbone output has {rows} rows, head expects {k} patches")));
        }
        if tape.value(self.weight).cols() != k * d {
            return Err(Error::shape(format!(
                "head width {} does not match {k} patches of width {d}",
                tape.value(self.weight).cols()
            )));
        }
        let tail = if rows == k { o } else { tape.slice_rows(o, rows - k, k)? };
        let flat = tape.reshape(tail, 1, k * d)?;
        let y = tape.matmul_t(flat, self.weight)?;
        tape.add_row(y, self.bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{normal_matrix, seeded_rng};

    #[test]
    fn census() {
        assert_eq!(ProjectionHead::param_count(12, 5, 16), 972);
        let h = ProjectionHead::init(12, 5, 16, &mut seeded_rng(0, 0));
        assert_eq!(h.weight.len() + h.bias.len(), 972);
    }

    #[test]
    fn prompt_rows_ignored() {
        let mut rng = seeded_rng(1, 0);
        let h = ProjectionHead::init(3, 2, 4, &mut rng);
        let mut o = normal_matrix(&mut rng, 5, 4, 1.0);
        let a = h.project(&o).unwrap();
        o.row_mut(0)[1] += 10.0;
        o.row_mut(2)[3] -= 4.0;
        assert_eq!(a, h.project(&o).unwrap());
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn zero_output() {
        let mut h = ProjectionHead::init(3, 2, 4, &mut seeded_rng(1, 0));
        h.bias = Matrix::zeros(1, 3);
        assert_eq!(h.project(&Matrix::zeros(2, 4)).unwrap(), vec![0.0; 3]);
        assert!(h.project(&Matrix::zeros(1, 4)).is_err());
    }
}
