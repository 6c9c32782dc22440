use super::sampling::{delaunay_2d, unit_samples};
use super::{BoxDomain, Evaluator, ShgoError};

/// Sampled vertices with their triangulation and the edge orientation used
/// to read off local minimizers.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Index lists of `dim + 1` vertices each.
    pub simplices: Vec<Vec<usize>>,
    /// Each undirected edge once, oriented `(from, to)` toward the higher
    /// value. Equal values are oriented toward the higher index.
    pub edges: Vec<(usize, usize)>,
    pub neighbors: Vec<Vec<usize>>,
}

impl SimplicialComplex {
    /// Index of the lowest sampled value; ties keep the lower index.
    pub fn best_vertex(&self) -> usize {
        (0..self.values.len())
            .fold(0, |best, i| if self.values[i] < self.values[best] { i } else { best })
    }

    /// Longest edge; every point of the hull is this close to some vertex.
    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b)| {
                self.vertices[a]
                    .iter()
                    .zip(&self.vertices[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Bounding box of all simplices containing `v`.
    pub fn star(&self, v: usize) -> BoxDomain {
        let mut lower = self.vertices[v].clone();
        let mut upper = self.vertices[v].clone();
        for s in self.simplices.iter().filter(|s| s.contains(&v)) {
            for &w in s {
                for (k, &x) in self.vertices[w].iter().enumerate() {
                    lower[k] = lower[k].min(x);
                    upper[k] = upper[k].max(x);
                }
            }
        }
        BoxDomain { lower, upper }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MinimizerSet {
    /// Sorted by value, then index.
    pub vertices: Vec<usize>,
    pub stars: Vec<BoxDomain>,
}

impl MinimizerSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Samples the objective, triangulates the samples and orients every edge.
pub fn build_complex<F: FnMut(&[f64]) -> f64>(
    f: F,
    domain: &BoxDomain,
    n_samples: usize,
) -> Result<SimplicialComplex, ShgoError> {
    let mut eval = Evaluator::new(f);
    build_with(&mut eval, domain, n_samples)
}

pub(super) fn build_with<F: FnMut(&[f64]) -> f64>(
    eval: &mut Evaluator<F>,
    domain: &BoxDomain,
    n_samples: usize,
) -> Result<SimplicialComplex, ShgoError> {
    build_from(domain, n_samples, |xs| xs.iter().map(|x| eval.call(x)).collect())
}

pub(super) fn build_from(
    domain: &BoxDomain,
    n_samples: usize,
    sample: impl FnOnce(&[Vec<f64>]) -> Result<Vec<f64>, ShgoError>,
) -> Result<SimplicialComplex, ShgoError> {
    let dim = domain.dim();
    if dim > 2 {
        return Err(ShgoError::Dimension(dim));
    }
    if n_samples < dim + 2 {
        return Err(ShgoError::TooFewSamples { dim, required: dim + 2, got: n_samples });
    }
    let unit = unit_samples(dim, n_samples);
    let vertices: Vec<Vec<f64>> = unit.iter().map(|u| domain.from_unit(u)).collect();
    let values = sample(&vertices)?;
    let simplices: Vec<Vec<usize>> = if dim == 1 {
        (0..vertices.len() - 1).map(|i| vec![i, i + 1]).collect()
    } else {
        let pts: Vec<[f64; 2]> = unit.iter().map(|u| [u[0], u[1]]).collect();
        delaunay_2d(&pts).into_iter().map(|t| t.to_vec()).collect()
    };
    let mut neighbors = vec![Vec::new(); vertices.len()];
    for s in &simplices {
        for (i, &a) in s.iter().enumerate() {
            for &b in &s[i + 1..] {
                if !neighbors[a].contains(&b) {
                    neighbors[a].push(b);
                    neighbors[b].push(a);
                }
            }
        }
    }
    for n in &mut neighbors {
        n.sort_unstable();
    }
    let mut edges = Vec::new();
    for (a, ns) in neighbors.iter().enumerate() {
        for &b in ns.iter().filter(|&&b| b > a) {
            let forward = values[a] < values[b] || (values[a] == values[b] && a < b);
            edges.push(if forward { (a, b) } else { (b, a) });
        }
    }
    Ok(SimplicialComplex { dim, vertices, values, simplices, edges, neighbors })
}

/// Vertices with every incident edge directed away. With the index
/// tie-break, one vertex of a tied pair still qualifies, so a symmetric
/// basin whose bottom falls between two samples is not lost.
pub fn extract_minimizers(complex: &SimplicialComplex) -> MinimizerSet {
    let below = |v: usize, w: usize| {
        let (fv, fw) = (complex.values[v], complex.values[w]);
        fv < fw || (fv == fw && v < w)
    };
    let mut vertices: Vec<usize> = (0..complex.vertices.len())
        .filter(|&v| {
            !complex.neighbors[v].is_empty() && complex.neighbors[v].iter().all(|&w| below(v, w))
        })
        .collect();
    vertices.sort_by(|&a, &b| complex.values[a].total_cmp(&complex.values[b]).then(a.cmp(&b)));
    let stars = vertices.iter().map(|&v| complex.star(v)).collect();
    MinimizerSet { vertices, stars }
}
