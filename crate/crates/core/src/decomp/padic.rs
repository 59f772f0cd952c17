//! p-adic Cartan and Iwasawa decompositions by elimination over `Z_(p)`.
//!
//! Every elementary operation used here (row/column swaps, adding a multiple
//! of valuation ≥ 0, scaling by a unit) is an isometry of the max norm, and
//! the inverse of each operation is recorded alongside it, so `k⁻¹` and
//! `u⁻¹` come out exactly without a separate inversion.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{CartanParts, IwasawaParts};
use crate::error::{Error, Result};
use crate::projlin::Matrix;
use crate::scalar::{PAdic, Valuation};

/// Smith normal form over the valuation ring.
///
/// Maintains `m = k · w · u` while `w` is reduced to `diag(p^{m_1}, …, p^{m_d})`.
/// Pivot: an entry of minimal valuation in the trailing block, ties broken by
/// smallest `(row, col)`.
pub(crate) fn cartan(field: &PAdic, m: &Matrix<BigRational>) -> Result<CartanParts<BigRational>> {
    let d = m.rows();
    let mut w = m.clone();
    let mut k = Matrix::<BigRational>::identity(d);
    let mut k_inv = Matrix::<BigRational>::identity(d);
    let mut u = Matrix::<BigRational>::identity(d);
    let mut u_inv = Matrix::<BigRational>::identity(d);
    let mut exps = Vec::with_capacity(d);

    for t in 0..d {
        let mut best: Option<(Valuation, usize, usize)> = None;
        for i in t..d {
            for j in t..d {
                let v = field.valuation(&w[(i, j)]);
                if v == Valuation::Infinite {
                    continue;
                }
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                }
            }
        }
        let Some((Valuation::Finite(e), pi, pj)) = best else {
            return Err(Error::Domain("singular matrix".into()));
        };

        // w ← P w, k ← k P, k⁻¹ ← P k⁻¹  (P a transposition, P⁻¹ = P)
        w.swap_rows(t, pi);
        k.swap_cols(t, pi);
        k_inv.swap_rows(t, pi);
        // w ← w Q, u ← Q u, u⁻¹ ← u⁻¹ Q
        w.swap_cols(t, pj);
        u.swap_rows(t, pj);
        u_inv.swap_cols(t, pj);

        let pivot = w[(t, t)].clone();
        for i in t + 1..d {
            if w[(i, t)].is_zero() {
                continue;
            }
            // E = I − c e_i e_tᵀ, valuation(c) ≥ 0
            let c = &w[(i, t)] / &pivot;
            w.add_row_multiple(i, t, &-c.clone());
            k.add_col_multiple(t, i, &c);
            k_inv.add_row_multiple(i, t, &-c);
        }
        for j in t + 1..d {
            if w[(t, j)].is_zero() {
                continue;
            }
            // F = I − c e_t e_jᵀ
            let c = &w[(t, j)] / &pivot;
            w.add_col_multiple(j, t, &-c.clone());
            u.add_row_multiple(t, j, &c);
            u_inv.add_col_multiple(j, t, &-c);
        }

        // pivot = p^e · unit; move the unit into k
        let power = field.power(e);
        let unit = &pivot / &power;
        let unit_inv = BigRational::one() / &unit;
        k.scale_col(t, &unit);
        k_inv.scale_row(t, &unit_inv);
        w[(t, t)] = power;
        exps.push(e);
    }

    debug_assert!(exps.windows(2).all(|p| p[0] <= p[1]), "pivot valuations must be non-decreasing");
    let a = exps.iter().map(|&e| field.power(e)).collect();
    Ok(CartanParts { k, k_inv, a, u, u_inv })
}

/// Row reduction `k⁻¹ m = diag(a) · n` with `n` upper unitriangular.
///
/// Column by column, the entry of minimal valuation on or below the diagonal
/// (smallest row on ties) is swapped up and used to clear the rest of the
/// column. The unit part of each diagonal entry is absorbed into `k`.
pub(crate) fn iwasawa(field: &PAdic, m: &Matrix<BigRational>) -> Result<IwasawaParts<BigRational>> {
    let d = m.rows();
    let mut r = m.clone();
    let mut k = Matrix::<BigRational>::identity(d);

    for t in 0..d {
        let mut best: Option<(Valuation, usize)> = None;
        for i in t..d {
            let v = field.valuation(&r[(i, t)]);
            if v == Valuation::Infinite {
                continue;
            }
            if best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, i));
            }
        }
        let Some((_, pi)) = best else {
            return Err(Error::Domain("singular matrix".into()));
        };
        r.swap_rows(t, pi);
        k.swap_cols(t, pi);
        let pivot = r[(t, t)].clone();
        for i in t + 1..d {
            if r[(i, t)].is_zero() {
                continue;
            }
            let c = &r[(i, t)] / &pivot;
            r.add_row_multiple(i, t, &-c.clone());
            k.add_col_multiple(t, i, &c);
        }
    }

    let mut a = Vec::with_capacity(d);
    for t in 0..d {
        let diag = r[(t, t)].clone();
        let Valuation::Finite(e) = field.valuation(&diag) else {
            return Err(Error::Domain("singular matrix".into()));
        };
        let power = field.power(e);
        let unit = &diag / &power;
        k.scale_col(t, &unit);
        // row t of r becomes p^e · (row of n)
        let scale = BigRational::one() / &diag;
        r.scale_row(t, &scale);
        a.push(power);
    }
    Ok(IwasawaParts { k, a, n: r })
}
