//! Open knot vectors and Cox–de Boor evaluation of univariate B-splines.

use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector<T> {
    knots: Vec<T>,
    degree: usize,
}

impl<T: Real> KnotVector<T> {
    /// Validates an open (clamped) knot vector of degree `degree`.
    pub fn new(knots: Vec<T>, degree: usize) -> Result<Self> {
        let m = knots.len();
        if m < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "{m} knots cannot form an open vector of degree {degree}"
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be non-decreasing".into()));
        }
        let (a, b) = (knots[0], knots[m - 1]);
        if !(a < b) {
            return Err(Error::InvalidKnots("knot vector spans an empty interval".into()));
        }
        if knots[..=degree].iter().any(|&k| k != a) || knots[m - degree - 1..].iter().any(|&k| k != b) {
            return Err(Error::InvalidKnots(format!(
                "end knots must have multiplicity {}",
                degree + 1
            )));
        }
        let kv = Self { knots, degree };
        for (k, mult) in kv.unique_with_multiplicity() {
            if k != a && k != b && mult > degree + 1 {
                return Err(Error::InvalidKnots(format!(
                    "interior knot {k} has multiplicity {mult} > {}",
                    degree + 1
                )));
            }
        }
        Ok(kv)
    }

    /// Open knot vector on `[0, 1]` with `elements` uniform spans.
    pub fn uniform(degree: usize, elements: usize) -> Self {
        assert!(elements >= 1);
        let mut k = vec![T::zero(); degree + 1];
        for e in 1..elements {
            k.push(T::from_usize_lossy(e) / T::from_usize_lossy(elements));
        }
        k.extend(std::iter::repeat(T::one()).take(degree + 1));
        Self { knots: k, degree }
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn first(&self) -> T {
        self.knots[0]
    }

    pub fn last(&self) -> T {
        self.knots[self.knots.len() - 1]
    }

    pub fn multiplicity(&self, x: T) -> usize {
        self.knots.iter().filter(|&&k| k == x).count()
    }

    pub fn unique_with_multiplicity(&self) -> Vec<(T, usize)> {
        let mut out: Vec<(T, usize)> = Vec::new();
        for &k in &self.knots {
            match out.last_mut() {
                Some((v, m)) if *v == k => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Non-degenerate knot spans as `(span index, left knot, right knot)`.
    pub fn elements(&self) -> Vec<(usize, T, T)> {
        (self.degree..self.num_basis())
            .filter(|&i| self.knots[i] < self.knots[i + 1])
            .map(|i| (i, self.knots[i], self.knots[i + 1]))
            .collect()
    }

    /// Span index `i` with `knots[i] <= xi < knots[i + 1]`; the last
    /// non-degenerate span at the right end.
    pub fn find_span(&self, xi: T) -> Result<usize> {
        let (a, b) = (self.first(), self.last());
        if !(xi >= a && xi <= b) {
            return Err(Error::Domain(format!(
                "parameter {xi} outside knot range [{a}, {b}]"
            )));
        }
        let n = self.num_basis();
        if xi == b {
            let mut i = n - 1;
            while self.knots[i] >= self.knots[i + 1] {
                i -= 1;
            }
            return Ok(i);
        }
        let (mut lo, mut hi) = (self.degree, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if xi < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    /// The `p + 1` non-vanishing basis values on `span` at `xi`.
    pub fn basis_values(&self, span: usize, xi: T) -> Vec<T> {
        let p = self.degree;
        let k = &self.knots;
        let mut n = vec![T::zero(); p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        n[0] = T::one();
        for j in 1..=p {
            left[j] = xi - k[span + 1 - j];
            right[j] = k[span + j] - xi;
            let mut saved = T::zero();
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n
    }

    /// Non-vanishing basis values and derivatives up to `order`:
    /// `out[k][r]` is the `k`-th derivative of basis `span - p + r`.
    pub fn basis_derivatives(&self, span: usize, xi: T, order: usize) -> Result<Vec<Vec<T>>> {
        let p = self.degree;
        if order > p {
            return Err(Error::Domain(format!(
                "derivative order {order} exceeds degree {p}"
            )));
        }
        let k = &self.knots;
        let mut ndu = vec![vec![T::zero(); p + 1]; p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        ndu[0][0] = T::one();
        for j in 1..=p {
            left[j] = xi - k[span + 1 - j];
            right[j] = k[span + j] - xi;
            let mut saved = T::zero();
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![T::zero(); p + 1]; order + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![T::zero(); p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = T::one();
            for kk in 1..=order {
                let mut d = T::zero();
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if r >= kk {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = T::from_usize_lossy(p);
        for (kk, row) in ders.iter_mut().enumerate().skip(1) {
            for v in row.iter_mut() {
                *v *= fac;
            }
            fac *= T::from_usize_lossy(p.saturating_sub(kk));
        }
        Ok(ders)
    }

    /// Convenience: span and non-vanishing values at `xi`.
    pub fn eval_basis(&self, xi: T) -> Result<(usize, Vec<T>)> {
        let span = self.find_span(xi)?;
        Ok((span, self.basis_values(span, xi)))
    }

    /// Convenience: span, values and derivatives at `xi`.
    pub fn eval_basis_derivs(&self, xi: T, order: usize) -> Result<(usize, Vec<Vec<T>>)> {
        let span = self.find_span(xi)?;
        Ok((span, self.basis_derivatives(span, xi, order)?))
    }

    /// Index of the first non-vanishing basis function on `span`.
    pub fn first_active(&self, span: usize) -> usize {
        span - self.degree
    }

    /// Greville abscissa of basis function `i`.
    pub fn greville(&self, i: usize) -> T {
        let p = self.degree;
        if p == 0 {
            return (self.knots[i] + self.knots[i + 1]) * T::lit(0.5);
        }
        self.knots[i + 1..=i + p].iter().copied().sum::<T>() / T::from_usize_lossy(p)
    }

    /// Reverses the parametrization `ξ ↦ a + b - ξ`.
    pub fn reversed(&self) -> Self {
        let (a, b) = (self.first(), self.last());
        Self {
            knots: self.knots.iter().rev().map(|&k| a + b - k).collect(),
            degree: self.degree,
        }
    }

    /// Single Boehm insertion of `x` into a sequence of control rows.
    ///
    /// `rows[i]` holds the (homogeneous) data attached to basis function `i`;
    /// returns the refined knot vector and rows.
    pub fn insert(&self, x: T, rows: &[Vec<T>]) -> Result<(Self, Vec<Vec<T>>)> {
        let p = self.degree;
        let (a, b) = (self.first(), self.last());
        if !(x > a && x < b) {
            return Err(Error::Domain(format!(
                "inserted knot {x} must lie strictly inside ({a}, {b})"
            )));
        }
        let s = self.multiplicity(x);
        if s + 1 > p {
            return Err(Error::Domain(format!(
                "inserting {x} would raise its multiplicity to {} > degree {p}",
                s + 1
            )));
        }
        assert_eq!(rows.len(), self.num_basis(), "control row count");
        let k = self.find_span(x)?;
        let n = self.num_basis();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            if i + p <= k {
                out.push(rows[i].clone());
            } else if i > k {
                out.push(rows[i - 1].clone());
            } else {
                let alpha = (x - self.knots[i]) / (self.knots[i + p] - self.knots[i]);
                let row: Vec<T> = rows[i]
                    .iter()
                    .zip(&rows[i - 1])
                    .map(|(&qi, &qm)| alpha * qi + (T::one() - alpha) * qm)
                    .collect();
                out.push(row);
            }
        }
        let mut knots = self.knots.clone();
        knots.insert(k + 1, x);
        Ok((Self { knots, degree: p }, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct recursion on the B-spline recurrence (convention 0/0 = 0).
    fn cox_de_boor(k: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            let last = *k.last().unwrap();
            if k[i] <= x && x < k[i + 1] {
                return 1.0;
            }
            // right end belongs to the last non-degenerate span
            if x == last && k[i] < k[i + 1] && k[i + 1] == last {
                return 1.0;
            }
            return 0.0;
        }
        let mut v = 0.0;
        let d1 = k[i + p] - k[i];
        if d1 > 0.0 {
            v += (x - k[i]) / d1 * cox_de_boor(k, i, p - 1, x);
        }
        let d2 = k[i + p + 1] - k[i + 1];
        if d2 > 0.0 {
            v += (k[i + p + 1] - x) / d2 * cox_de_boor(k, i + 1, p - 1, x);
        }
        v
    }

    fn kv(k: &[f64], p: usize) -> KnotVector<f64> {
        KnotVector::new(k.to_vec(), p).unwrap()
    }

    #[test]
    fn span_examples() {
        assert_eq!(kv(&[0., 0., 0., 0.5, 1., 1., 1.], 2).find_span(0.25).unwrap(), 2);
        assert_eq!(kv(&[0., 0., 1., 1.], 1).find_span(1.0).unwrap(), 1);
        assert_eq!(kv(&[0., 0., 0., 1., 1., 1.], 2).find_span(0.0).unwrap(), 2);
        assert!(matches!(kv(&[0., 0., 1., 1.], 1).find_span(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn span_matches_linear_scan() {
        let k = kv(&[0., 0., 0., 0.2, 0.2, 0.5, 0.9, 1., 1., 1.], 2);
        for s in 0..=200 {
            let x = s as f64 / 200.0;
            let scan = (0..k.knots().len() - 1)
                .filter(|&i| k.knots()[i] <= x && x < k.knots()[i + 1])
                .last()
                .unwrap_or(k.num_basis() - 1);
            assert_eq!(k.find_span(x).unwrap(), scan, "x = {x}");
        }
    }

    #[test]
    fn basis_examples() {
        let (_, v) = kv(&[0., 0., 1., 1.], 1).eval_basis(0.5).unwrap();
        assert_eq!(v, vec![0.5, 0.5]);
        let (_, v) = kv(&[0., 0., 0., 1., 1., 1.], 2).eval_basis(0.5).unwrap();
        assert_eq!(v, vec![0.25, 0.5, 0.25]);
        let knots = [0., 0., 0., 0.5, 1., 1., 1.];
        let (span, v) = kv(&knots, 2).eval_basis(0.25).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for (r, &val) in v.iter().enumerate() {
            let oracle = cox_de_boor(&knots, span - 2 + r, 2, 0.25);
            assert!((val - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_matches_recursion_everywhere() {
        let knots = [0., 0., 0., 0., 0.3, 0.3, 0.6, 1., 1., 1., 1.];
        let k = kv(&knots, 3);
        for s in 0..=100 {
            let x = s as f64 / 100.0;
            let (span, v) = k.eval_basis(x).unwrap();
            assert!(v.iter().all(|&b| b >= 0.0));
            assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-14);
            for i in 0..k.num_basis() {
                let expected = cox_de_boor(&knots, i, 3, x);
                let got = if i + 3 >= span && i <= span { v[i + 3 - span] } else { 0.0 };
                assert!((got - expected).abs() < 1e-14, "i={i} x={x}");
            }
        }
    }

    #[test]
    fn derivative_examples() {
        let (_, d) = kv(&[0., 0., 1., 1.], 1).eval_basis_derivs(0.3, 1).unwrap();
        assert_eq!(d[1], vec![-1.0, 1.0]);
        let (_, d) = kv(&[0., 0., 0., 1., 1., 1.], 2).eval_basis_derivs(0.5, 1).unwrap();
        for (got, want) in d[1].iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(kv(&[0., 0., 1., 1.], 1).eval_basis_derivs(0.3, 2).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences_and_sum_to_zero() {
        let k = kv(&[0., 0., 0., 0., 0.25, 0.5, 0.5, 0.75, 1., 1., 1., 1.], 3);
        let h = 1e-6;
        for s in 1..50 {
            let x = s as f64 / 50.0 + 0.003;
            let span = k.find_span(x).unwrap();
            let d = k.basis_derivatives(span, x, 2).unwrap();
            assert_eq!(d[0], k.basis_values(span, x));
            assert!(d[1].iter().sum::<f64>().abs() < 1e-12);
            assert!(d[2].iter().sum::<f64>().abs() < 1e-9);
            let vp = k.basis_values(span, x + h);
            let vm = k.basis_values(span, x - h);
            for r in 0..4 {
                let fd = (vp[r] - vm[r]) / (2.0 * h);
                assert!((fd - d[1][r]).abs() < 1e-6 * (1.0 + d[1][r].abs()));
            }
        }
    }

    #[test]
    fn validation() {
        assert!(KnotVector::new(vec![0., 0.5, 1., 1.], 1).is_err());
        assert!(KnotVector::new(vec![0., 0., 0.7, 0.3, 1., 1.], 1).is_err());
        assert!(KnotVector::new(vec![0., 0., 0.5, 0.5, 0.5, 1., 1.], 1).is_err());
        assert!(KnotVector::new(vec![0., 0., 0.5, 0.5, 1., 1.], 1).is_ok());
    }

    #[test]
    fn insertion_rules() {
        let k = KnotVector::<f64>::uniform(2, 1);
        let rows: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64]).collect();
        let (k1, r1) = k.insert(0.5, &rows).unwrap();
        assert_eq!(k1.num_basis(), 4);
        assert_eq!(r1.len(), 4);
        let (k2, r2) = k1.insert(0.5, &r1).unwrap();
        assert_eq!(k2.multiplicity(0.5), 2);
        assert!(k2.insert(0.5, &r2).is_err());
        assert!(k.insert(1.0, &rows).is_err());
        assert!(k.insert(-0.1, &rows).is_err());
    }

    #[test]
    fn single_precision_partition_of_unity() {
        let k = KnotVector::<f32>::uniform(3, 4);
        let (_, v) = k.eval_basis(0.37).unwrap();
        assert!((v.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }
}
