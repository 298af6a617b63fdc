//! Two-pass 8-connected component labeling.

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so the representative is the earliest label
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Labels the `true` cells of a row-major `nrows x ncols` raster.
///
/// Returns one cell list per component, ordered by each component's first cell in
/// raster-scan order; cells inside a component are also in raster order.
pub(crate) fn components(on: &[bool], nrows: usize, ncols: usize) -> Vec<Vec<(usize, usize)>> {
    const UNSET: u32 = u32::MAX;
    let mut labels = vec![UNSET; on.len()];
    let mut uf = UnionFind::new();

    for r in 0..nrows {
        for c in 0..ncols {
            let i = r * ncols + c;
            if !on[i] {
                continue;
            }
            // already-visited neighbors: W, NW, N, NE
            let mut neighbors = [UNSET; 4];
            if c > 0 {
                neighbors[0] = labels[i - 1];
            }
            if r > 0 {
                let up = i - ncols;
                if c > 0 {
                    neighbors[1] = labels[up - 1];
                }
                neighbors[2] = labels[up];
                if c + 1 < ncols {
                    neighbors[3] = labels[up + 1];
                }
            }
            let mut label = UNSET;
            for &n in neighbors.iter().filter(|&&n| n != UNSET) {
                if label == UNSET {
                    label = n;
                } else {
                    uf.union(label, n);
                }
            }
            labels[i] = if label == UNSET { uf.make() } else { label };
        }
    }

    let mut slot_of_root = vec![UNSET; uf.parent.len()];
    let mut out: Vec<Vec<(usize, usize)>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == UNSET {
            continue;
        }
        let root = uf.find(l) as usize;
        if slot_of_root[root] == UNSET {
            slot_of_root[root] = out.len() as u32;
            out.push(Vec::new());
        }
        out[slot_of_root[root] as usize].push((i / ncols, i % ncols));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> (Vec<bool>, usize, usize) {
        let ncols = rows[0].len();
        let on = rows
            .iter()
            .flat_map(|r| r.chars().map(|ch| ch == '#'))
            .collect();
        (on, rows.len(), ncols)
    }

    #[test]
    fn diagonal_cells_join() {
        let (on, nr, nc) = mask(&["#..", ".#.", "..#"]);
        assert_eq!(components(&on, nr, nc).len(), 1);
    }

    #[test]
    fn u_shape_merges_late() {
        let (on, nr, nc) = mask(&["#.#", "#.#", "###"]);
        let comps = components(&on, nr, nc);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 7);
    }

    #[test]
    fn raster_order_of_first_pixel() {
        let (on, nr, nc) = mask(&["...#", "#...", "#..."]);
        let comps = components(&on, nr, nc);
        assert_eq!(comps[0], vec![(0, 3)]);
        assert_eq!(comps[1], vec![(1, 0), (2, 0)]);
    }
}
