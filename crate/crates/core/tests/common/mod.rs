#![allow(dead_code)]

/// Depth-first flood fill, 8-connected; components ordered by first cell in raster order.
pub fn flood_fill(on: &[bool], nrows: usize, ncols: usize) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![false; on.len()];
    let mut out = Vec::new();
    for start in 0..on.len() {
        if !on[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (r, c) = (i / ncols, i % ncols);
            comp.push((r, c));
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                    if rr < 0 || cc < 0 || rr >= nrows as i64 || cc >= ncols as i64 {
                        continue;
                    }
                    let j = rr as usize * ncols + cc as usize;
                    if on[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
