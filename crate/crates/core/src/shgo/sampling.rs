//! Sample placement and triangulation on the unit box.

/// Direction numbers for the first two Sobol dimensions: dimension 1 is the
/// van der Corput sequence, dimension 2 uses the primitive polynomial `x + 1`.
fn direction_numbers() -> [[u32; 32]; 2] {
    let mut v = [[0u32; 32]; 2];
    for k in 0..32 {
        v[0][k] = 1 << (31 - k);
    }
    v[1][0] = 1 << 31;
    for k in 1..32 {
        v[1][k] = v[1][k - 1] ^ (v[1][k - 1] >> 1);
    }
    v
}

/// First `n` points of the unscrambled 2-D Sobol sequence in Gray-code order,
/// starting with the origin.
pub fn sobol_2d(n: usize) -> Vec<[f64; 2]> {
    let v = direction_numbers();
    let mut out = Vec::with_capacity(n);
    let mut x = [0u32; 2];
    for i in 0..n {
        out.push([x[0] as f64 / 4_294_967_296.0, x[1] as f64 / 4_294_967_296.0]);
        let c = (!(i as u32)).trailing_zeros() as usize;
        x[0] ^= v[0][c];
        x[1] ^= v[1][c];
    }
    out
}

/// Sample points in unit coordinates. In 1-D this is the uniform grid
/// `i/(n−1)`; in 2-D the four corners followed by Sobol points.
pub fn unit_samples(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect(),
        2 => {
            let mut pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
            // index 0 of the sequence is the origin, already a corner
            pts.extend(sobol_2d(n - 3).into_iter().skip(1).map(|p| p.to_vec()));
            pts
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` is strictly inside the circumcircle of the CCW triangle `abc`.
fn in_circle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// Delaunay triangulation by Bowyer–Watson insertion. The first four points
/// must be the corners of the convex hull in CCW order and every later point
/// must lie strictly inside it, which holds for [`unit_samples`].
/// Triangles are returned CCW.
pub fn delaunay_2d(points: &[[f64; 2]]) -> Vec<[usize; 3]> {
    assert!(points.len() >= 4, "need the four hull corners");
    let mut tris = vec![[0, 1, 2], [0, 2, 3]];
    for p in 4..points.len() {
        let d = points[p];
        let (bad, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) = tris
            .into_iter()
            .partition(|t| in_circle(points[t[0]], points[t[1]], points[t[2]], d) > 0.0);
        tris = keep;
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for t in &bad {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if let Some(pos) = boundary.iter().position(|&(a, b)| a == e.1 && b == e.0) {
                    boundary.swap_remove(pos);
                } else {
                    boundary.push(e);
                }
            }
        }
        for (a, b) in boundary {
            if orient(points[a], points[b], d) > 0.0 {
                tris.push([a, b, p]);
            }
        }
    }
    tris
}
