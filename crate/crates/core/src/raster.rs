//! Rectangular complex-plane rasters: cell geometry, flood fill, connected
//! components, box morphology, hole filling, and boundary tracing.

use num_complex::Complex64;

/// Axis-aligned rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Rect {
        Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    pub fn square(center: Complex64, half: f64) -> Rect {
        Rect {
            re_min: center.re - half,
            re_max: center.re + half,
            im_min: center.im - half,
            im_max: center.im + half,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Expand (or shrink) about the center by a linear factor.
    pub fn scaled(&self, factor: f64) -> Rect {
        let c = self.center();
        Rect {
            re_min: c.re - 0.5 * self.width() * factor,
            re_max: c.re + 0.5 * self.width() * factor,
            im_min: c.im - 0.5 * self.height() * factor,
            im_max: c.im + 0.5 * self.height() * factor,
        }
    }

    /// Smallest square rect centered on the bounding box of `points`, with
    /// the half-width grown by `margin_factor`.
    pub fn square_around<I: IntoIterator<Item = Complex64>>(
        points: I,
        margin_factor: f64,
        min_half: f64,
    ) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut re_min, mut re_max) = (first.re, first.re);
        let (mut im_min, mut im_max) = (first.im, first.im);
        for p in it {
            re_min = re_min.min(p.re);
            re_max = re_max.max(p.re);
            im_min = im_min.min(p.im);
            im_max = im_max.max(p.im);
        }
        let cx = 0.5 * (re_min + re_max);
        let cy = 0.5 * (im_min + im_max);
        let half = (0.5 * (re_max - re_min))
            .max(0.5 * (im_max - im_min))
            .max(min_half)
            * margin_factor;
        Some(Rect::square(Complex64::new(cx, cy), half))
    }
}

/// A `res × res` grid of cells over a rectangle.
///
/// Cell centers are computed as an offset from the window center so that a
/// window symmetric about the origin has exactly mirror-symmetric centers in
/// floating point.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub rect: Rect,
    pub res: usize,
    data: Vec<T>,
}

impl<T: Clone + Default> Grid<T> {
    pub fn new(rect: Rect, res: usize) -> Grid<T> {
        Grid {
            rect,
            res,
            data: vec![T::default(); res * res],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(rect: Rect, res: usize, data: Vec<T>) -> Grid<T> {
        assert_eq!(data.len(), res * res);
        Grid { rect, res, data }
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.res + ix
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> &T {
        &self.data[self.idx(ix, iy)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: T) {
        let i = self.idx(ix, iy);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn cell_width(&self) -> f64 {
        self.rect.width() / self.res as f64
    }

    pub fn cell_height(&self) -> f64 {
        self.rect.height() / self.res as f64
    }

    /// Center of cell (ix, iy). `(2·ix + 1 − res)/2` is exact in f64, so the
    /// centers of a zero-centered window negate exactly under index mirroring.
    #[inline]
    pub fn cell_center(&self, ix: usize, iy: usize) -> Complex64 {
        let c = self.rect.center();
        let tx = 0.5 * (2.0 * ix as f64 + 1.0 - self.res as f64);
        let ty = 0.5 * (2.0 * iy as f64 + 1.0 - self.res as f64);
        Complex64::new(c.re + tx * self.cell_width(), c.im + ty * self.cell_height())
    }

    /// Cell containing z, or None outside the window. Points exactly on the
    /// far edges land in the last cell.
    #[inline]
    pub fn locate(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.rect.contains(z) {
            return None;
        }
        let fx = (z.re - self.rect.re_min) / self.cell_width();
        let fy = (z.im - self.rect.im_min) / self.cell_height();
        let ix = (fx as usize).min(self.res - 1);
        let iy = (fy as usize).min(self.res - 1);
        Some((ix, iy))
    }

    pub fn cells(&self) -> usize {
        self.res * self.res
    }
}

impl Grid<bool> {
    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any_set(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    /// True when some set cell lies within `margin` cells of the window edge.
    pub fn touches_border(&self, margin: usize) -> bool {
        let n = self.res;
        for iy in 0..n {
            for ix in 0..n {
                if *self.get(ix, iy)
                    && (ix < margin || iy < margin || ix >= n - margin || iy >= n - margin)
                {
                    return true;
                }
            }
        }
        false
    }

    /// Index bounding box of set cells: (ix_min, iy_min, ix_max, iy_max).
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let mut out: Option<(usize, usize, usize, usize)> = None;
        for iy in 0..self.res {
            for ix in 0..self.res {
                if *self.get(ix, iy) {
                    out = Some(match out {
                        None => (ix, iy, ix, iy),
                        Some((x0, y0, x1, y1)) => (x0.min(ix), y0.min(iy), x1.max(ix), y1.max(iy)),
                    });
                }
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &Grid<bool>) -> bool {
        debug_assert_eq!(self.res, other.res);
        self.data
            .iter()
            .zip(other.data.iter())
            .all(|(&a, &b)| !a || b)
    }
}

/// Chebyshev dilation by `radius` cells (separable max filter).
pub fn dilate(g: &Grid<bool>, radius: usize) -> Grid<bool> {
    if radius == 0 {
        return g.clone();
    }
    let n = g.res;
    let mut horiz = Grid::<bool>::new(g.rect, n);
    for iy in 0..n {
        for ix in 0..n {
            let lo = ix.saturating_sub(radius);
            let hi = (ix + radius).min(n - 1);
            let mut v = false;
            for jx in lo..=hi {
                if *g.get(jx, iy) {
                    v = true;
                    break;
                }
            }
            horiz.set(ix, iy, v);
        }
    }
    let mut out = Grid::<bool>::new(g.rect, n);
    for iy in 0..n {
        for ix in 0..n {
            let lo = iy.saturating_sub(radius);
            let hi = (iy + radius).min(n - 1);
            let mut v = false;
            for jy in lo..=hi {
                if *horiz.get(ix, jy) {
                    v = true;
                    break;
                }
            }
            out.set(ix, iy, v);
        }
    }
    out
}

/// Chebyshev erosion by `radius` cells. Cells near the window edge erode
/// against the (empty) outside.
pub fn erode(g: &Grid<bool>, radius: usize) -> Grid<bool> {
    if radius == 0 {
        return g.clone();
    }
    let n = g.res;
    let mut inv = Grid::<bool>::new(g.rect, n);
    for i in 0..g.cells() {
        inv.as_mut_slice()[i] = !g.as_slice()[i];
    }
    let dil = dilate_with_border(&inv, radius);
    let mut out = Grid::<bool>::new(g.rect, n);
    for i in 0..g.cells() {
        out.as_mut_slice()[i] = !dil.as_slice()[i];
    }
    out
}

// Dilation treating out-of-window cells as set; only used by erode.
fn dilate_with_border(g: &Grid<bool>, radius: usize) -> Grid<bool> {
    let n = g.res;
    let mut horiz = Grid::<bool>::new(g.rect, n);
    for iy in 0..n {
        for ix in 0..n {
            let border = ix < radius || ix + radius >= n;
            let lo = ix.saturating_sub(radius);
            let hi = (ix + radius).min(n - 1);
            let v = border || (lo..=hi).any(|jx| *g.get(jx, iy));
            horiz.set(ix, iy, v);
        }
    }
    let mut out = Grid::<bool>::new(g.rect, n);
    for iy in 0..n {
        for ix in 0..n {
            let border = iy < radius || iy + radius >= n;
            let lo = iy.saturating_sub(radius);
            let hi = (iy + radius).min(n - 1);
            let v = border || (lo..=hi).any(|jy| *horiz.get(ix, jy));
            out.set(ix, iy, v);
        }
    }
    out
}

/// Morphological closing with the given radius: dilation then erosion.
pub fn close(g: &Grid<bool>, radius: usize) -> Grid<bool> {
    erode(&dilate(g, radius), radius)
}

const NEIGH8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];
const NEIGH4: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

fn label_components(g: &Grid<bool>, neigh: &[(i64, i64)]) -> (Grid<u32>, usize) {
    let n = g.res as i64;
    let mut labels = Grid::<u32>::new(g.rect, g.res);
    let mut next = 0u32;
    let mut stack: Vec<(i64, i64)> = Vec::new();
    for iy in 0..g.res {
        for ix in 0..g.res {
            if !*g.get(ix, iy) || *labels.get(ix, iy) != 0 {
                continue;
            }
            next += 1;
            labels.set(ix, iy, next);
            stack.push((ix as i64, iy as i64));
            while let Some((x, y)) = stack.pop() {
                for &(dx, dy) in neigh {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= n || ny >= n {
                        continue;
                    }
                    let (ux, uy) = (nx as usize, ny as usize);
                    if *g.get(ux, uy) && *labels.get(ux, uy) == 0 {
                        labels.set(ux, uy, next);
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

/// 8-connected component labels (1-based; 0 = unset cell) and the count.
pub fn components8(g: &Grid<bool>) -> (Grid<u32>, usize) {
    label_components(g, &NEIGH8)
}

/// 4-connected component labels and the count.
pub fn components4(g: &Grid<bool>) -> (Grid<u32>, usize) {
    label_components(g, &NEIGH4)
}

/// Topological hull on the raster: the region plus every complement
/// component that does not touch the window border.
pub fn fill_holes(g: &Grid<bool>) -> Grid<bool> {
    let n = g.res;
    let mut outside = Grid::<bool>::new(g.rect, n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let push = |outside: &mut Grid<bool>, stack: &mut Vec<(usize, usize)>, ix: usize, iy: usize| {
        if !*g.get(ix, iy) && !*outside.get(ix, iy) {
            outside.set(ix, iy, true);
            stack.push((ix, iy));
        }
    };
    for i in 0..n {
        push(&mut outside, &mut stack, i, 0);
        push(&mut outside, &mut stack, i, n - 1);
        push(&mut outside, &mut stack, 0, i);
        push(&mut outside, &mut stack, n - 1, i);
    }
    while let Some((x, y)) = stack.pop() {
        for &(dx, dy) in &NEIGH4 {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= n as i64 || ny >= n as i64 {
                continue;
            }
            push(&mut outside, &mut stack, nx as usize, ny as usize);
        }
    }
    let mut out = Grid::<bool>::new(g.rect, n);
    for i in 0..out.cells() {
        out.as_mut_slice()[i] = !outside.as_slice()[i];
    }
    out
}

/// Cells of the region whose 1-erosion is gone: the interior boundary ring.
pub fn inner_ring(region: &Grid<bool>) -> Grid<bool> {
    let er = erode(region, 1);
    let mut out = Grid::<bool>::new(region.rect, region.res);
    for i in 0..region.cells() {
        out.as_mut_slice()[i] = region.as_slice()[i] && !er.as_slice()[i];
    }
    out
}

/// Outer boundary of a connected region as a closed polyline of cell
/// centers (Moore neighbor tracing; the first vertex is not repeated).
pub fn trace_outer_contour(region: &Grid<bool>) -> Vec<Complex64> {
    let n = region.res as i64;
    let at = |x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && x < n && y < n && *region.get(x as usize, y as usize)
    };
    // Top-most then left-most set cell.
    let mut start = None;
    'scan: for iy in 0..region.res {
        for ix in 0..region.res {
            if *region.get(ix, iy) {
                start = Some((ix as i64, iy as i64));
                break 'scan;
            }
        }
    }
    let Some(start) = start else {
        return Vec::new();
    };
    // Clockwise Moore neighborhood starting west.
    const MOORE: [(i64, i64); 8] = [
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
    ];
    let mut contour = vec![start];
    let mut cur = start;
    let mut backtrack = 0usize; // enter from the west initially
    loop {
        let mut found = None;
        for k in 0..8 {
            let dir = (backtrack + 1 + k) % 8;
            let cand = (cur.0 + MOORE[dir].0, cur.1 + MOORE[dir].1);
            if at(cand.0, cand.1) {
                found = Some((cand, dir));
                break;
            }
        }
        match found {
            None => break, // isolated cell
            Some((next, dir)) => {
                if next == start && contour.len() > 1 {
                    break;
                }
                contour.push(next);
                cur = next;
                // Re-enter the scan just past the cell we came from.
                backtrack = (dir + 4) % 8;
            }
        }
    }
    contour
        .into_iter()
        .map(|(x, y)| region.cell_center(x as usize, y as usize))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid_from(rows: &[&str]) -> Grid<bool> {
        let res = rows.len();
        let rect = Rect::new(0.0, res as f64, 0.0, res as f64);
        let mut g = Grid::<bool>::new(rect, res);
        for (iy, row) in rows.iter().enumerate() {
            for (ix, ch) in row.chars().enumerate() {
                g.set(ix, iy, ch == '#');
            }
        }
        g
    }

    #[test]
    fn centers_mirror_exactly() {
        let g = Grid::<bool>::new(Rect::square(Complex64::new(0.0, 0.0), 3.0), 64);
        for iy in 0..64 {
            for ix in 0..64 {
                let a = g.cell_center(ix, iy);
                let b = g.cell_center(63 - ix, 63 - iy);
                assert_eq!(a.re, -b.re);
                assert_eq!(a.im, -b.im);
            }
        }
    }

    #[test]
    fn locate_roundtrip() {
        let g = Grid::<bool>::new(Rect::square(Complex64::new(0.5, -0.25), 2.0), 97);
        for iy in (0..97).step_by(13) {
            for ix in (0..97).step_by(7) {
                let c = g.cell_center(ix, iy);
                assert_eq!(g.locate(c), Some((ix, iy)));
            }
        }
        assert_eq!(g.locate(Complex64::new(100.0, 0.0)), None);
    }

    #[test]
    fn closing_bridges_one_cell_gap() {
        let g = grid_from(&[
            "........",
            "..#.#...",
            "........",
            "........",
            "........",
            "........",
            "........",
            "........",
        ]);
        let closed = close(&g, 1);
        let (_, n) = components8(&closed);
        assert_eq!(n, 1);
    }

    #[test]
    fn components_count_far_cells() {
        let g = grid_from(&[
            "#.......",
            "........",
            "........",
            "........",
            "........",
            "........",
            "........",
            ".......#",
        ]);
        let (_, n8) = components8(&g);
        assert_eq!(n8, 2);
    }

    #[test]
    fn fill_holes_closes_ring() {
        let g = grid_from(&[
            "........",
            ".#####..",
            ".#...#..",
            ".#...#..",
            ".#####..",
            "........",
            "........",
            "........",
        ]);
        let filled = fill_holes(&g);
        assert!(*filled.get(3, 2));
        assert!(!*filled.get(7, 7));
    }

    #[test]
    fn contour_walks_square() {
        let g = grid_from(&[
            "........",
            ".###....",
            ".###....",
            ".###....",
            "........",
            "........",
            "........",
            "........",
        ]);
        let contour = trace_outer_contour(&g);
        assert_eq!(contour.len(), 8); // ring of the 3×3 block
    }

    #[test]
    fn erode_respects_window_edge() {
        let g = grid_from(&[
            "##......",
            "##......",
            "........",
            "........",
            "........",
            "........",
            "........",
            "........",
        ]);
        let e = erode(&g, 1);
        assert!(!e.any_set());
    }
}
