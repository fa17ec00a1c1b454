//! Reduced density matrices and Schmidt spectra.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ensembles::{CMatrix, Entries};
use crate::{Error, Result};

/// Eigenvalues in `[-NEGATIVE_TOLERANCE, 0)` are roundoff and clamped to 0.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-10;

/// Trace-normalized `ρ_A = CC†/Tr CC†`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Entries,
    raw_trace: f64,
}

impl DensityMatrix {
    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    /// `Tr CC†` before normalization.
    pub fn raw_trace(&self) -> f64 {
        self.raw_trace
    }

    pub fn dim(&self) -> usize {
        match &self.entries {
            Entries::Real(m) => m.nrows(),
            Entries::Complex(m) => m.nrows(),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.entries {
            Entries::Real(m) => m.trace(),
            Entries::Complex(m) => m.trace().re,
        }
    }
}

/// Unnormalized Wishart matrix `CC†`, exactly self-adjoint.
pub fn gram(c: &CMatrix) -> Entries {
    gram_of(c.entries())
}

pub(crate) fn gram_of(entries: &Entries) -> Entries {
    match entries {
        Entries::Real(m) => {
            let t = m.transpose();
            let mut w = t.tr_mul(&t);
            symmetrize_real(&mut w);
            Entries::Real(w)
        }
        Entries::Complex(m) => {
            let t = m.adjoint();
            let mut w = t.ad_mul(&t);
            symmetrize_complex(&mut w);
            Entries::Complex(w)
        }
    }
}

fn symmetrize_real(w: &mut DMatrix<f64>) {
    let n = w.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (w[(i, j)] + w[(j, i)]);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
}

fn symmetrize_complex(w: &mut DMatrix<Complex64>) {
    let n = w.nrows();
    for j in 0..n {
        w[(j, j)].im = 0.0;
        for i in (j + 1)..n {
            let v = 0.5 * (w[(i, j)] + w[(j, i)].conj());
            w[(i, j)] = v;
            w[(j, i)] = v.conj();
        }
    }
}

pub fn reduce(c: &CMatrix) -> Result<DensityMatrix> {
    reduce_entries(c.entries())
}

pub(crate) fn reduce_entries(entries: &Entries) -> Result<DensityMatrix> {
    let g = gram_of(entries);
    let (raw_trace, entries) = match g {
        Entries::Real(w) => {
            let t = w.trace();
            (t, Entries::Real(w / t))
        }
        Entries::Complex(w) => {
            let t = w.trace().re;
            (t, Entries::Complex(w.map(|z| z / t)))
        }
    };
    if raw_trace == 0.0 {
        return Err(Error::DegenerateState);
    }
    if !raw_trace.is_finite() {
        return Err(Error::numerical("Tr CC† is not finite"));
    }
    Ok(DensityMatrix { entries, raw_trace })
}

/// Eigenvalues of a self-adjoint matrix, unsorted.
pub fn eigenvalues(entries: &Entries) -> Result<Vec<f64>> {
    let finite = match entries {
        Entries::Real(m) => m.iter().all(|v| v.is_finite()),
        Entries::Complex(m) => m.iter().all(|v| v.re.is_finite() && v.im.is_finite()),
    };
    if !finite {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    let vals: Vec<f64> = match entries {
        Entries::Real(m) => m.symmetric_eigenvalues().iter().copied().collect(),
        Entries::Complex(m) => m.symmetric_eigenvalues().iter().copied().collect(),
    };
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("eigensolver returned non-finite values"));
    }
    Ok(vals)
}

/// Eigenvalues in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

fn sort_clamp(mut values: Vec<f64>) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::domain("empty spectrum"));
    }
    if let Some(&v) = values.iter().find(|v| !v.is_finite() || **v < -NEGATIVE_TOLERANCE) {
        return Err(Error::numerical(format!("eigenvalue {v:e} is negative beyond roundoff")));
    }
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

impl Spectrum {
    /// Normalized spectrum: entries `>= -1e-12` (then clamped) summing to 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mut values = sort_clamp(values)?;
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::numerical(format!("spectrum sums to {total}, not 1")));
        }
        for v in values.iter_mut() {
            *v = v.min(1.0);
        }
        Ok(Spectrum { values })
    }

    /// Spectrum without the unit-trace constraint (for Wishart studies).
    pub fn unnormalized(values: Vec<f64>) -> Result<Self> {
        Ok(Spectrum { values: sort_clamp(values)? })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }
}

pub fn spectrum(rho: &DensityMatrix) -> Result<Spectrum> {
    Spectrum::new(eigenvalues(&rho.entries)?)
}

/// Schmidt spectrum of a coefficient matrix.
pub fn schmidt_spectrum(c: &CMatrix) -> Result<Spectrum> {
    spectrum(&reduce(c)?)
}

/// Long-format CSV `sample,index,lambda` of raw spectra.
pub fn write_spectra_csv<'a, W: Write>(
    out: W,
    spectra: impl IntoIterator<Item = (u64, &'a Spectrum)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample", "index", "lambda"])?;
    for (id, s) in spectra {
        for (i, v) in s.values().iter().enumerate() {
            w.write_record([id.to_string(), (i + 1).to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn real(rows: usize, cols: usize, v: &[f64]) -> CMatrix {
        CMatrix::real(DMatrix::from_row_slice(rows, cols, v)).unwrap()
    }

    fn rho_real(c: &CMatrix) -> DMatrix<f64> {
        match reduce(c).unwrap().entries {
            Entries::Real(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn rank_one_states() {
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rho_real(&real(2, 2, &[1.0, 0.0, 0.0, 0.0])), expect);
        assert_eq!(rho_real(&real(2, 2, &[1.0, 1.0, 0.0, 0.0])), expect);
    }

    #[test]
    fn maximally_entangled_pair() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = rho_real(&real(2, 2, &[s, 0.0, 0.0, s]));
        assert_abs_diff_eq!(rho, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]), epsilon = 1e-15);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        assert!(matches!(reduce(&real(2, 3, &[0.0; 6])), Err(Error::DegenerateState)));
    }

    #[test]
    fn small_spectra() {
        let d = DensityMatrix { entries: Entries::Real(DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.7])), raw_trace: 1.0 };
        assert_eq!(spectrum(&d).unwrap().values(), &[0.7, 0.3]);
        let p = DensityMatrix { entries: Entries::Real(DMatrix::from_element(2, 2, 0.5)), raw_trace: 1.0 };
        let s = spectrum(&p).unwrap();
        assert_abs_diff_eq!(s.values()[0], 1.0, epsilon = 1e-14);
        assert!(s.values()[1] < 1e-14);
    }

    #[test]
    fn spectrum_rejects_bad_values() {
        assert!(Spectrum::new(vec![0.6, 0.5]).is_err());
        assert!(Spectrum::new(vec![1.0 + 1e-6, -1e-6]).is_err());
        assert_eq!(Spectrum::new(vec![1.0, -1e-13]).unwrap().values(), &[1.0, 0.0]);
        assert!(Spectrum::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn complex_density_is_hermitian_with_real_diagonal() {
        let m = DMatrix::from_fn(3, 4, |i, j| Complex64::new((i + 2 * j) as f64 * 0.3 - 1.0, (i * j) as f64 * 0.7 - 0.2));
        let rho = reduce(&CMatrix::complex(m).unwrap()).unwrap();
        let Entries::Complex(w) = rho.entries() else { unreachable!() };
        assert_eq!(w, &w.adjoint());
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn spectra_csv_layout() {
        let s = Spectrum::new(vec![0.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        write_spectra_csv(&mut buf, [(3, &s)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "sample,index,lambda\n3,1,0.75\n3,2,0.25\n");
    }
}
