use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Binary-response design for the probit mixed model `P(Y=1) = Φ(Xβ + ZU)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    y: Vec<bool>,
    block_sizes: Vec<usize>,
    variable_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        z: DMatrix<f64>,
        y: Vec<bool>,
        block_sizes: Vec<usize>,
        variable_names: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n || z.nrows() != n {
            return Err(Error::Data(format!(
                "row counts disagree: X has {}, Z has {}, Y has {n}",
                x.nrows(),
                z.nrows()
            )));
        }
        if variable_names.len() != x.ncols() {
            return Err(Error::Data(format!(
                "{} variable names for {} columns",
                variable_names.len(),
                x.ncols()
            )));
        }
        let q: usize = block_sizes.iter().sum();
        if q != z.ncols() {
            return Err(Error::Data(format!(
                "random-effect blocks sum to {q} but Z has {} columns",
                z.ncols()
            )));
        }
        if block_sizes.contains(&0) {
            return Err(Error::Data("empty random-effect block".into()));
        }
        if x.iter().chain(z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("X and Z must be finite".into()));
        }
        Ok(Self {
            x,
            z,
            y,
            block_sizes,
            variable_names,
        })
    }

    /// Builds a dataset with one random effect whose design is the one-hot
    /// encoding of `levels` (values in `0..n_levels`).
    pub fn with_levels(
        x: DMatrix<f64>,
        levels: &[usize],
        n_levels: usize,
        y: Vec<bool>,
        variable_names: Vec<String>,
    ) -> Result<Self> {
        if let Some(&bad) = levels.iter().find(|&&l| l >= n_levels) {
            return Err(Error::Data(format!(
                "level {bad} out of range for {n_levels} levels"
            )));
        }
        let z = DMatrix::from_fn(levels.len(), n_levels, |i, j| {
            if levels[i] == j {
                1.0
            } else {
                0.0
            }
        });
        Self::new(x, z, y, vec![n_levels], variable_names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.z.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    /// Level index of every row for a single one-hot random effect, if Z has
    /// that shape.
    pub fn levels(&self) -> Option<Vec<usize>> {
        if self.block_sizes.len() != 1 {
            return None;
        }
        (0..self.n())
            .map(|i| {
                let row = self.z.row(i);
                let ones: Vec<usize> = (0..self.q()).filter(|&j| row[j] == 1.0).collect();
                let zeros = row.iter().filter(|&&v| v == 0.0).count();
                (ones.len() == 1 && zeros == self.q() - 1).then(|| ones[0])
            })
            .collect()
    }

    /// Restriction to a subset of fixed-effect columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.p()) {
            return Err(Error::Data(format!("column {bad} out of range")));
        }
        let x = self.x.select_columns(columns);
        let names = columns
            .iter()
            .map(|&c| self.variable_names[c].clone())
            .collect();
        Self::new(
            x,
            self.z.clone(),
            self.y.clone(),
            self.block_sizes.clone(),
            names,
        )
    }

    /// Fraction of rows with `Y = 1`.
    pub fn class_balance(&self) -> f64 {
        if self.y.is_empty() {
            return 0.0;
        }
        self.y.iter().filter(|&&v| v).count() as f64 / self.n() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (1..=p).map(|j| format!("V{j}")).collect()
    }

    #[test]
    fn one_hot_levels_round_trip() {
        let x = DMatrix::zeros(4, 2);
        let d = Dataset::with_levels(
            x,
            &[0, 1, 2, 1],
            3,
            vec![true, false, true, false],
            names(2),
        )
        .unwrap();
        assert_eq!(d.q(), 3);
        assert_eq!(d.block_sizes(), &[3]);
        assert_eq!(d.levels().unwrap(), vec![0, 1, 2, 1]);
        assert_eq!(d.class_balance(), 0.5);
    }

    #[test]
    fn block_sizes_must_cover_z() {
        let r = Dataset::new(
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 3),
            vec![true, false],
            vec![2],
            names(1),
        );
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn non_finite_design_rejected() {
        let mut x = DMatrix::zeros(2, 1);
        x[(0, 0)] = f64::NAN;
        let r = Dataset::with_levels(x, &[0, 0], 1, vec![true, false], names(1));
        assert!(r.is_err());
    }

    #[test]
    fn select_columns_keeps_names() {
        let x = DMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64);
        let d = Dataset::with_levels(x, &[0, 0, 0], 1, vec![true; 3], names(4)).unwrap();
        let s = d.select_columns(&[3, 1]).unwrap();
        assert_eq!(s.variable_names(), &["V4".to_string(), "V2".to_string()]);
        assert_eq!(s.x()[(2, 0)], 11.0);
        assert!(d.select_columns(&[4]).is_err());
    }
}
