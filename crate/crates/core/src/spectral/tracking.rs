//! Following eigenpairs across consecutive ε values.
//!
//! Overlaps `|⟨v_i(ε_j), v_l(ε_{j+1})⟩|` are computed after rotating each
//! degenerate cluster at `ε_{j+1}` onto its predecessors (orthogonal
//! Procrustes), so gauge freedom inside a cluster does not break tracks.
//! Tracks are then matched by a maximum-weight assignment.

use nalgebra::{DMatrix, DVector};

use crate::exterior::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: usize,
    pub degree: usize,
    /// Index of the eigenpair at each schedule step, `None` outside the track's life.
    pub members: Vec<Option<usize>>,
    /// Overlap with the predecessor at each step (`None` at the first step of the track).
    pub overlaps: Vec<Option<f64>>,
    /// True if the track ended before the last schedule step.
    pub broken: bool,
}

impl Track {
    pub fn first_step(&self) -> usize {
        self.members.iter().position(Option::is_some).unwrap_or(self.members.len())
    }

    pub fn last_step(&self) -> Option<usize> {
        self.members.iter().rposition(Option::is_some)
    }

    pub fn alive_at(&self, step: usize) -> Option<usize> {
        self.members.get(step).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|m| m.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Groups of consecutive indices whose eigenvalues agree within `rel` (plus an absolute
/// floor `abs`).
pub fn clusters(values: &[f64], rel: f64, abs: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if let Some(last) = out.last_mut() {
            let prev = values[*last.last().unwrap()];
            if (v - prev).abs() <= rel * v.abs().max(prev.abs()) + abs {
                last.push(i);
                continue;
            }
        }
        out.push(vec![i]);
    }
    out
}

/// Maximum-weight perfect assignment of rows to columns of a square matrix
/// (Hungarian method on the negated weights). Returns `col[row]`.
pub fn max_assignment(w: &DMatrix<f64>) -> Vec<usize> {
    let n = w.nrows();
    assert_eq!(n, w.ncols());
    if n == 0 {
        return Vec::new();
    }
    let big = w.iter().copied().fold(0.0, f64::max);
    let cost = |i: usize, j: usize| big - w[(i - 1, j - 1)];
    // 1-based potentials formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            col[p[j] - 1] = j - 1;
        }
    }
    col
}

/// `|⟨prev_i, next_l⟩|` after Procrustes-rotating each cluster of `next` onto the
/// predecessors it overlaps most.
pub fn aligned_overlaps(
    prev: &[DVector<C64>],
    next: &[DVector<C64>],
    next_clusters: &[Vec<usize>],
) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(prev.len(), next.len(), |i, l| prev[i].dotc(&next[l]));
    let mut out = raw.map(|c| c.norm());
    for cl in next_clusters {
        if cl.len() < 2 || prev.is_empty() {
            continue;
        }
        // predecessors ranked by their weight inside span(cluster)
        let mut ranked: Vec<(usize, f64)> = (0..prev.len())
            .map(|i| (i, cl.iter().map(|&l| raw[(i, l)].norm_sqr()).sum::<f64>()))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let chosen: Vec<usize> = ranked.iter().take(cl.len()).map(|r| r.0).collect();
        let c = chosen.len();
        // M = V_next[cl]* V_prev[chosen]; U = W Z* from M = W Σ Z*
        let m = DMatrix::from_fn(cl.len(), c, |a, b| raw[(chosen[b], cl[a])].conj());
        let svd = m.svd(true, true);
        let (Some(w), Some(zt)) = (svd.u, svd.v_t) else { continue };
        let rot = w * zt;
        // rotated next vectors: ṽ_b = Σ_a v_{cl[a]} rot[a, b]
        for (b, _) in cl.iter().enumerate() {
            for i in 0..prev.len() {
                let s: C64 = cl.iter().enumerate().map(|(a, &l)| raw[(i, l)] * rot[(a, b)]).sum();
                out[(i, cl[b])] = s.norm();
            }
        }
    }
    out
}

/// Links eigenpairs across the schedule. `vectors[j]` and `values[j]` hold the
/// (ascending) eigenpairs at step `j`; ids start at `first_id`.
pub fn track(
    degree: usize,
    values: &[Vec<f64>],
    vectors: &[Vec<DVector<C64>>],
    min_overlap: f64,
    cluster_rel: f64,
    first_id: usize,
) -> Vec<Track> {
    let steps = values.len();
    let mut tracks: Vec<Track> = Vec::new();
    let mut open: Vec<Option<usize>> = Vec::new();
    let new_track = |tracks: &mut Vec<Track>, step: usize, idx: usize| {
        let mut members = vec![None; steps];
        members[step] = Some(idx);
        tracks.push(Track {
            id: first_id + tracks.len(),
            degree,
            members,
            overlaps: vec![None; steps],
            broken: false,
        });
        tracks.len() - 1
    };
    if steps == 0 {
        return tracks;
    }
    for idx in 0..values[0].len() {
        let t = new_track(&mut tracks, 0, idx);
        open.push(Some(t));
    }
    for j in 0..steps - 1 {
        let scale = values[j + 1].iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let cl = clusters(&values[j + 1], cluster_rel, 1e-12 * scale.max(1.0));
        let ov = aligned_overlaps(&vectors[j], &vectors[j + 1], &cl);
        let (np, nn) = ov.shape();
        let size = np.max(nn);
        let padded = DMatrix::from_fn(size, size, |a, b| if a < np && b < nn { ov[(a, b)] } else { 0.0 });
        let assign = max_assignment(&padded);
        let mut next_open = vec![None; nn];
        for (i, &l) in assign.iter().enumerate().take(np) {
            let Some(t) = open[i] else { continue };
            if l < nn && ov[(i, l)] >= min_overlap {
                tracks[t].members[j + 1] = Some(l);
                tracks[t].overlaps[j + 1] = Some(ov[(i, l)]);
                next_open[l] = Some(t);
            } else {
                tracks[t].broken = true;
            }
        }
        for (l, slot) in next_open.iter_mut().enumerate() {
            if slot.is_none() {
                *slot = Some(new_track(&mut tracks, j + 1, l));
            }
        }
        open = next_open;
    }
    tracks
}
