//! Browser front end for the PU solver: train on two synthetic blobs, draw
//! the decision field, plot the objective trace, and check the optimum
//! against the dense reference solver.

use usmo::data::{make_pu_split, two_blobs, Label};
use usmo::initializer::InitMode;
use usmo::kernel::KernelSpec;
use usmo::oracle::solve_dense;
use usmo::solver::{self, derive_constants, Hyperparams};
use usmo::UsmoError;
use wasm_bindgen::prelude::*;

/// Point kinds in [`Fit::kinds`].
pub const HIDDEN_NEGATIVE: u8 = 0;
pub const HIDDEN_POSITIVE: u8 = 1;
pub const LABELED_POSITIVE: u8 = 2;

/// A trained model rendered onto a square grid.
#[wasm_bindgen]
pub struct Fit {
    extent: f64,
    grid: usize,
    field: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    kinds: Vec<u8>,
    trace: Vec<f64>,
    summary: String,
    f_measure: f64,
}

#[wasm_bindgen]
impl Fit {
    /// Half-width of the plotted square, centered on the origin.
    #[wasm_bindgen(getter)]
    pub fn extent(&self) -> f64 {
        self.extent
    }

    #[wasm_bindgen(getter)]
    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Decision scores, row-major with `y` decreasing down the rows.
    pub fn field(&self) -> Vec<f64> {
        self.field.clone()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.ys.clone()
    }

    pub fn kinds(&self) -> Vec<u8> {
        self.kinds.clone()
    }

    /// Dual objective after every iteration.
    pub fn trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn f_measure(&self) -> f64 {
        self.f_measure
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BlobParams {
    pub per_class: usize,
    pub separation: f64,
    pub labeled_fraction: f64,
    pub lambda: f64,
    pub scale: f64,
    pub seed: u64,
    pub grid: usize,
}

pub fn fit_blobs(b: BlobParams) -> Result<Fit, UsmoError> {
    let (x, y) = two_blobs(b.per_class, b.per_class, 2, b.separation, b.seed);
    let split = make_pu_split(&x, &y, b.labeled_fraction, b.seed)?;
    let h = Hyperparams::new(split.prior, b.lambda, KernelSpec::gaussian(b.scale)?);
    let sol = solver::train(&split.dataset, &h, InitMode::Ranked)?;
    let ds = &split.dataset;

    let mut xs = Vec::with_capacity(ds.len());
    let mut ys = Vec::with_capacity(ds.len());
    let mut kinds = Vec::with_capacity(ds.len());
    let mut extent = 1.0f64;
    for k in 0..ds.len() {
        let s = ds.sample(k);
        xs.push(s[0]);
        ys.push(s[1]);
        extent = extent.max(s[0].abs()).max(s[1].abs());
        kinds.push(if k < ds.p() {
            LABELED_POSITIVE
        } else if split.hidden_labels[k - ds.p()] == Label::Positive {
            HIDDEN_POSITIVE
        } else {
            HIDDEN_NEGATIVE
        });
    }
    extent *= 1.05;

    let g = b.grid.max(2);
    let mut field = Vec::with_capacity(g * g);
    for row in 0..g {
        let py = extent - 2.0 * extent * row as f64 / (g - 1) as f64;
        for col in 0..g {
            let px = -extent + 2.0 * extent * col as f64 / (g - 1) as f64;
            field.push(sol.model.predict_score(&[px, py])?);
        }
    }

    let predicted = (0..ds.n())
        .map(|u| sol.model.predict_label(ds.unlabeled(u)))
        .collect::<Result<Vec<_>, _>>()?;
    let f_measure = usmo::data::f_measure(&predicted, &split.hidden_labels)?;
    let summary = format!(
        "objective {:.6}, {} iterations, {} full scans, {} support vectors, F-measure {:.3}",
        sol.state.objective,
        sol.trace.iterations(),
        sol.trace.full_scans,
        sol.model.coefficients.len(),
        f_measure
    );
    Ok(Fit {
        extent,
        grid: g,
        field,
        xs,
        ys,
        kinds,
        trace: sol.trace.rows.iter().map(|r| r.objective).collect(),
        summary,
        f_measure,
    })
}

/// Solver objective minus dense-solver objective on a small blob instance.
pub fn gap_to_dense(per_class: usize, lambda: f64, scale: f64, seed: u64) -> Result<(f64, f64), UsmoError> {
    let (x, y) = two_blobs(per_class, per_class, 2, 2.0, seed);
    let split = make_pu_split(&x, &y, 0.3, seed)?;
    let ds = &split.dataset;
    let h = Hyperparams::new(split.prior, lambda, KernelSpec::gaussian(scale)?).with_tau(1e-6);
    let c = derive_constants(&h, ds.p(), ds.n())?;
    let dense = solve_dense(ds, &c, h.kernel)?;
    let sol = solver::train(ds, &h, InitMode::Ranked)?;
    Ok((sol.state.objective, sol.state.objective - dense.objective))
}

fn js_err(e: UsmoError) -> JsError {
    JsError::new(&e.to_string())
}

/// Trains on two blobs and rasterizes the decision field.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn train_blobs(
    per_class: usize,
    separation: f64,
    labeled_fraction: f64,
    lambda: f64,
    scale: f64,
    seed: u32,
    grid: usize,
) -> Result<Fit, JsError> {
    fit_blobs(BlobParams {
        per_class,
        separation,
        labeled_fraction,
        lambda,
        scale,
        seed: seed.into(),
        grid,
    })
    .map_err(js_err)
}

/// Runs both solvers on a small instance and reports the objective gap.
#[wasm_bindgen]
pub fn oracle_check(per_class: usize, lambda: f64, scale: f64, seed: u32) -> Result<String, JsError> {
    let (obj, gap) = gap_to_dense(per_class, lambda, scale, seed.into()).map_err(js_err)?;
    Ok(format!("solver objective {obj:.8}, minus dense reference: {gap:.3e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> BlobParams {
        BlobParams {
            per_class: 60,
            separation: 5.0,
            labeled_fraction: 0.3,
            lambda: 0.01,
            scale: 1.0,
            seed: 3,
            grid: 16,
        }
    }

    #[test]
    fn fit_shapes() {
        let fit = fit_blobs(params()).unwrap();
        assert_eq!(fit.field.len(), 16 * 16);
        assert_eq!(fit.xs.len(), 120);
        assert_eq!(fit.kinds.iter().filter(|&&k| k == LABELED_POSITIVE).count(), 18);
        assert!(fit.trace.windows(2).all(|w| w[1] < w[0]));
        assert!(fit.f_measure > 0.9);
        // positives sit right of the origin, so the right edge scores higher
        let row = &fit.field[8 * 16..9 * 16];
        assert!(row[15] > row[0]);
    }

    #[test]
    fn fit_is_deterministic() {
        let a = fit_blobs(params()).unwrap();
        let b = fit_blobs(params()).unwrap();
        assert_eq!(a.field, b.field);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn oracle_gap_small() {
        let (_, gap) = gap_to_dense(20, 0.05, 1.0, 1).unwrap();
        assert!(gap.abs() < 1e-5, "{gap}");
    }

    #[test]
    fn bad_scale_is_reported() {
        let p = BlobParams { scale: 0.0, ..params() };
        assert!(matches!(fit_blobs(p), Err(UsmoError::Config(_))));
    }
}
