//! Correlation-matrix PCA and varimax rotation.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub labels: Vec<String>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    /// Eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Unit eigenvectors: `loadings[variable][component]`, all components.
    pub loadings: Vec<Vec<f64>>,
    /// Number of retained components.
    pub n_components: usize,
    /// Varimax rotation of the retained factor loadings
    /// (eigenvector times sqrt(eigenvalue)): `rotated[variable][factor]`.
    pub rotated: Vec<Vec<f64>>,
    pub rotation: Vec<Vec<f64>>,
    pub varimax_iterations: usize,
    pub varimax_converged: bool,
}

impl PcaModel {
    /// Scores of `rows` on component `component` (standardized data times eigenvector).
    pub fn scores(&self, rows: &[Vec<f64>], component: usize) -> Vec<f64> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| (v - self.means[j]) / self.std_devs[j] * self.loadings[j][component])
                    .sum()
            })
            .collect()
    }

    pub fn cumulative_variance(&self, k: usize) -> f64 {
        self.explained_variance_ratio.iter().take(k).sum()
    }
}

/// PCA on the correlation matrix of `rows` (observations × variables).
pub fn pca(rows: &[Vec<f64>], labels: &[&str], n_components: usize) -> Result<PcaModel> {
    let n = rows.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("pca needs at least 10 rows, got {n}")));
    }
    let p = labels.len();
    if p < 2 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::InsufficientData(format!("pca needs rows of {p} >= 2 columns")));
    }
    if n_components == 0 || n_components > p {
        return Err(Error::Config(format!("n_components must be in 1..={p}, got {n_components}")));
    }
    let nf = n as f64;
    let mut means = vec![0.0; p];
    let mut std_devs = vec![0.0; p];
    for j in 0..p {
        let m = rows.iter().map(|r| r[j]).sum::<f64>() / nf;
        let var = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / (nf - 1.0);
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::InsufficientData(format!("pca column `{}` is constant", labels[j])));
        }
        means[j] = m;
        std_devs[j] = var.sqrt();
    }
    let z = DMatrix::from_fn(n, p, |i, j| (rows[i][j] - means[j]) / std_devs[j]);
    let corr = (z.transpose() * &z) / (nf - 1.0);
    let corr = (&corr + corr.transpose()) * 0.5;
    let eig = SymmetricEigen::new(corr);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let explained_variance_ratio = eigenvalues.iter().map(|l| l / total).collect();

    let mut vecs = DMatrix::zeros(p, p);
    for (c, &k) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(k).into_owned();
        let lead = col.iter().copied().fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if lead < 0.0 {
            col = -col;
        }
        vecs.set_column(c, &col);
    }

    let factors = DMatrix::from_fn(p, n_components, |i, c| vecs[(i, c)] * eigenvalues[c].sqrt());
    let vm = if n_components >= 2 {
        varimax(&factors, 1e-6, 100)?
    } else {
        VarimaxResult {
            rotated: factors.clone(),
            rotation: DMatrix::identity(1, 1),
            iterations: 0,
            converged: true,
        }
    };

    Ok(PcaModel {
        labels: labels.iter().map(|s| s.to_string()).collect(),
        means,
        std_devs,
        eigenvalues,
        explained_variance_ratio,
        loadings: to_rows(&vecs),
        n_components,
        rotated: to_rows(&vm.rotated),
        rotation: to_rows(&vm.rotation),
        varimax_iterations: vm.iterations,
        varimax_converged: vm.converged,
    })
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone)]
pub struct VarimaxResult {
    pub rotated: DMatrix<f64>,
    pub rotation: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Orthogonal varimax rotation (raw criterion, no Kaiser row normalization).
/// The SVD update gets close quickly; Kaiser's pairwise planar rotations then
/// polish the result, each being the exact optimum in its plane, so the
/// criterion never falls below that of the input. Iteration stops when a
/// sweep improves the criterion by less than `tol` relative. Non-convergence
/// is logged and the last iterate returned.
pub fn varimax(loadings: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<VarimaxResult> {
    let (p, k) = loadings.shape();
    if k < 2 {
        return Err(Error::InsufficientData("varimax needs at least two factors".into()));
    }
    let pf = p as f64;
    let mut rotation = DMatrix::<f64>::identity(k, k);
    let mut d = 0.0;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let l = loadings * &rotation;
        let mut target = l.map(|v| v * v * v);
        for j in 0..k {
            let ss: f64 = l.column(j).iter().map(|v| v * v).sum();
            let adj = l.column(j) * (ss / pf);
            let mut col = target.column_mut(j);
            col -= adj;
        }
        let b = loadings.transpose() * target;
        let svd = b.svd(true, true);
        let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        rotation = u * v_t;
        let d_new: f64 = svd.singular_values.iter().sum();
        if d_new < d * (1.0 + tol) {
            break;
        }
        d = d_new;
    }
    // the SVD update is not monotone (e.g. with an all-zero column); never start worse than the input
    if varimax_criterion(&(loadings * &rotation)) < varimax_criterion(loadings) {
        rotation = DMatrix::identity(k, k);
    }
    let mut l = loadings * &rotation;
    let mut current = varimax_criterion(&l);
    let mut converged = false;
    for _ in 0..max_iter {
        iterations += 1;
        for a in 0..k {
            for b in a + 1..k {
                let theta = planar_angle(&l, a, b);
                if theta == 0.0 {
                    continue;
                }
                let (c, s) = (theta.cos(), theta.sin());
                for m in [&mut l, &mut rotation] {
                    for i in 0..m.nrows() {
                        let (x, y) = (m[(i, a)], m[(i, b)]);
                        m[(i, a)] = c * x + s * y;
                        m[(i, b)] = -s * x + c * y;
                    }
                }
            }
        }
        let next = varimax_criterion(&l);
        let gain = next - current;
        current = next;
        if gain <= tol * current.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("varimax did not converge after {max_iter} iterations; returning last iterate");
    }
    Ok(VarimaxResult {
        rotated: loadings * &rotation,
        rotation,
        iterations,
        converged,
    })
}

/// Angle maximizing the raw criterion when columns `a` and `b` are rotated
/// by `[x, y] -> [x cos + y sin, -x sin + y cos]`.
fn planar_angle(l: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let p = l.nrows() as f64;
    let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..l.nrows() {
        let (x, y) = (l[(i, a)], l[(i, b)]);
        let (u, v) = (x * x - y * y, 2.0 * x * y);
        sa += u;
        sb += v;
        sc += u * u - v * v;
        sd += 2.0 * u * v;
    }
    let num = sd - 2.0 * sa * sb / p;
    let den = sc - (sa * sa - sb * sb) / p;
    if num == 0.0 && den >= 0.0 {
        return 0.0;
    }
    num.atan2(den) / 4.0
}

/// Raw varimax criterion: sum over factors of the variance of squared loadings (times p).
pub fn varimax_criterion(loadings: &DMatrix<f64>) -> f64 {
    let p = loadings.nrows() as f64;
    (0..loadings.ncols())
        .map(|j| {
            let c = loadings.column(j);
            let s4: f64 = c.iter().map(|v| v.powi(4)).sum();
            let s2: f64 = c.iter().map(|v| v * v).sum();
            s4 - s2 * s2 / p
        })
        .sum()
}
