//! Exact Euclidean distance transform on regular grids.
//!
//! Separable lower-envelope-of-parabolas algorithm (Felzenszwalb and
//! Huttenlocher), applied axis by axis. Squared distances are computed in
//! cell units, so every intermediate value is an integer held exactly in an
//! `f64` and the result agrees bit for bit with a brute force search.

/// Squared distance (in cell units) from every cell centre to the nearest
/// site. Cells with no site anywhere in the grid get `f64::INFINITY`.
pub fn squared_edt(shape: [usize; 3], dim: usize, is_site: &[bool]) -> Vec<f64> {
    let n = shape[0] * shape[1] * shape[2];
    assert_eq!(is_site.len(), n);
    let mut d: Vec<f64> = is_site
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();
    let longest = shape.iter().copied().max().unwrap_or(1);
    let mut buf = Scratch::new(longest);
    let strides = [1, shape[0], shape[0] * shape[1]];
    for axis in 0..dim {
        let len = shape[axis];
        let stride = strides[axis];
        let (oa, ob) = other_axes(axis);
        let count_a = if oa < dim { shape[oa] } else { 1 };
        let count_b = if ob < dim { shape[ob] } else { 1 };
        for b in 0..count_b {
            for a in 0..count_a {
                let base = a * strides[oa] + b * strides[ob];
                for i in 0..len {
                    buf.f[i] = d[base + i * stride];
                }
                transform_line(&mut buf, len);
                for i in 0..len {
                    d[base + i * stride] = buf.out[i];
                }
            }
        }
    }
    d
}

fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

struct Scratch {
    f: Vec<f64>,
    out: Vec<f64>,
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Scratch {
    fn new(len: usize) -> Self {
        Scratch {
            f: vec![0.0; len],
            out: vec![0.0; len],
            v: vec![0; len],
            z: vec![0.0; len + 1],
        }
    }
}

fn transform_line(s: &mut Scratch, len: usize) {
    let f = &s.f;
    let v = &mut s.v;
    let z = &mut s.z;
    let mut k: isize = -1;
    for q in 0..len {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let fp = f[p] + (p * p) as f64;
            let sx = (fq - fp) / (2.0 * (q as f64 - p as f64));
            if sx <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = sx;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        for i in 0..len {
            s.out[i] = f64::INFINITY;
        }
        return;
    }
    let mut j = 0usize;
    for q in 0..len {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let dq = q as f64 - p as f64;
        s.out[q] = dq * dq + f[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(shape: [usize; 3], sites: &[bool]) -> Vec<f64> {
        let n = sites.len();
        let coords = |i: usize| {
            [
                (i % shape[0]) as f64,
                ((i / shape[0]) % shape[1]) as f64,
                (i / (shape[0] * shape[1])) as f64,
            ]
        };
        (0..n)
            .map(|i| {
                let a = coords(i);
                (0..n)
                    .filter(|&j| sites[j])
                    .map(|j| {
                        let b = coords(j);
                        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn single_site_line() {
        let sites = [false, false, true, false];
        let d = squared_edt([4, 1, 1], 1, &sites);
        assert_eq!(d, vec![4.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn no_sites_is_infinite() {
        let d = squared_edt([3, 2, 1], 2, &[false; 6]);
        assert!(d.iter().all(|v| v.is_infinite()));
    }

    proptest! {
        #[test]
        fn matches_brute_force_2d(bits in proptest::collection::vec(proptest::bool::weighted(0.15), 9 * 7)) {
            let shape = [9, 7, 1];
            prop_assert_eq!(squared_edt(shape, 2, &bits), brute(shape, &bits));
        }

        #[test]
        fn matches_brute_force_3d(bits in proptest::collection::vec(proptest::bool::weighted(0.1), 5 * 4 * 6)) {
            let shape = [5, 4, 6];
            prop_assert_eq!(squared_edt(shape, 3, &bits), brute(shape, &bits));
        }
    }
}
