use nalgebra::DMatrix;

/// Orthonormal basis of the column space from a column-pivoted QR, keeping
/// the columns whose `|R_kk|` exceeds `rel_tol * |R_00|`. Independent of
/// the SVD used by the crate.
pub fn qr_range_basis(e: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let qr = e.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|k| r[(k, k)].abs()).collect();
    let top = diag.first().copied().unwrap_or(0.0);
    let rank = diag.iter().take_while(|&&d| top > 0.0 && d > rel_tol * top).count();
    qr.q().columns(0, rank).into_owned()
}
