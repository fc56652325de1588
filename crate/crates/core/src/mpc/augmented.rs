use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;

use crate::dynamics::{Entity, StateSpaceSystem};
use crate::error::{Error, Result};
use crate::network::WaterNetwork;

/// Output map `y = C x` stored as sparse weighted rows. A row over a single
/// state is a plain selector; a pipe sensor averages its segments.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    rows: Vec<Vec<(usize, f64)>>,
    n_x: usize,
}

impl OutputMap {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, n_x: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("at least one sensor is required".into()));
        }
        if rows.iter().flatten().any(|&(i, _)| i >= n_x) {
            return Err(Error::Config("sensor index outside the state".into()));
        }
        Ok(OutputMap { rows, n_x })
    }

    /// Resolve entity names against the state layout of `sys`.
    pub fn from_names<S: AsRef<str>>(
        net: &WaterNetwork,
        sys: &StateSpaceSystem,
        names: &[S],
    ) -> Result<Self> {
        let rows = names
            .iter()
            .map(|n| {
                let e: Entity = sys.map.resolve(net, n.as_ref())?;
                let idx = sys.map.indices(e);
                let w = 1.0 / idx.len() as f64;
                Ok(idx.into_iter().map(|i| (i, w)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows, sys.n_x())
    }

    /// `n_y`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn apply(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows
                .iter()
                .map(|r| r.iter().map(|&(i, w)| w * x[i]).sum::<f64>()),
        )
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.rows.len(), self.n_x);
        for (r, row) in self.rows.iter().enumerate() {
            for &(i, w) in row {
                c[(r, i)] += w;
            }
        }
        c
    }
}

/// Columns `cols` of a CSR matrix, in the given order.
pub fn select_columns(m: &CsrMatrix<f64>, cols: &[usize]) -> CsrMatrix<f64> {
    let mut position = vec![usize::MAX; m.ncols()];
    for (new, &c) in cols.iter().enumerate() {
        position[c] = new;
    }
    let mut offsets = vec![0];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for row in m.row_iter() {
        let mut entries: Vec<(usize, f64)> = row
            .col_indices()
            .iter()
            .zip(row.values())
            .filter(|(&c, _)| position[c] != usize::MAX)
            .map(|(&c, &v)| (position[c], v))
            .collect();
        entries.sort_by_key(|e| e.0);
        for (c, v) in entries {
            indices.push(c);
            values.push(v);
        }
        offsets.push(indices.len());
    }
    CsrMatrix::try_from_csr_data(m.nrows(), cols.len(), offsets, indices, values)
        .expect("selected columns form a valid pattern")
}

/// Incremental model `x_a = [Δx; y]`:
/// `x_a(t+1) = Φ_a x_a(t) + Γ_a Δu(t)`, `y = C_a x_a` with
/// `Φ_a = [[A, 0], [CA, I]]`, `Γ_a = [B; CB]`, `C_a = [0, I]`.
///
/// The input space is restricted to the booster columns of `B`.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub a: CsrMatrix<f64>,
    pub b: CsrMatrix<f64>,
    pub c: OutputMap,
    /// Node positions of the input columns.
    pub inputs: Vec<usize>,
}

impl AugmentedSystem {
    pub fn new(sys: &StateSpaceSystem, c: OutputMap, inputs: &[usize]) -> Result<Self> {
        if c.n_x() != sys.n_x() {
            return Err(Error::Dimension {
                what: "sensor map",
                expected: sys.n_x(),
                found: c.n_x(),
            });
        }
        if let Some(&bad) = inputs.iter().find(|&&i| i >= sys.n_u()) {
            return Err(Error::Config(format!("input column {bad} out of range")));
        }
        Ok(AugmentedSystem {
            a: sys.a.clone(),
            b: select_columns(&sys.b, inputs),
            c,
            inputs: inputs.to_vec(),
        })
    }

    /// Build from dense matrices; `C` rows are taken as weights.
    pub fn from_dense(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Self> {
        let rows = c
            .row_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect();
        Ok(AugmentedSystem {
            a: CsrMatrix::from(&nalgebra_sparse::CooMatrix::from(a)),
            b: CsrMatrix::from(&nalgebra_sparse::CooMatrix::from(b)),
            c: OutputMap::from_rows(rows, a.nrows())?,
            inputs: (0..b.ncols()).collect(),
        })
    }

    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_y(&self) -> usize {
        self.c.len()
    }

    pub fn phi_a(&self) -> DMatrix<f64> {
        let (n, m) = (self.n_x(), self.n_y());
        let a = DMatrix::from(&self.a);
        let ca = self.c.dense() * &a;
        let mut phi = DMatrix::zeros(n + m, n + m);
        phi.view_mut((0, 0), (n, n)).copy_from(&a);
        phi.view_mut((n, 0), (m, n)).copy_from(&ca);
        phi.view_mut((n, n), (m, m)).fill_with_identity();
        phi
    }

    pub fn gamma_a(&self) -> DMatrix<f64> {
        let (n, m) = (self.n_x(), self.n_y());
        let b = DMatrix::from(&self.b);
        let cb = self.c.dense() * &b;
        let mut g = DMatrix::zeros(n + m, self.n_u());
        g.view_mut((0, 0), (n, self.n_u())).copy_from(&b);
        g.view_mut((n, 0), (m, self.n_u())).copy_from(&cb);
        g
    }

    pub fn c_a(&self) -> DMatrix<f64> {
        let (n, m) = (self.n_x(), self.n_y());
        let mut c = DMatrix::zeros(m, n + m);
        c.view_mut((0, n), (m, m)).fill_with_identity();
        c
    }
}
