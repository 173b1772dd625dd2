//! Maximal intersection (canonical) rectangles and the point/rectangle incidence matrix.
//!
//! Each axis is compressed into "atoms": every distinct finite bound `v_i` is an atom
//! `{v_i}`, and the open gaps `(-inf, v_0)`, `(v_0, v_1)`, ..., `(v_{k-1}, inf)` are atoms
//! too. Every observation interval, closed or half-open, is a contiguous atom range, so
//! the plane becomes a grid of cells with well-defined covering sets.

use std::fmt;

use crate::censdata::{Dataset, ExtendedReal, Interval};
use crate::scalar::Scalar;

/// Maximal intersection of observation rectangles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalRectangle<T> {
    pub x: Interval<T>,
    pub y: Interval<T>,
}

impl<T: Scalar> Eq for CanonicalRectangle<T> {}

impl<T: Scalar> CanonicalRectangle<T> {
    pub fn l1(&self) -> ExtendedReal<T> {
        self.x.lo
    }
    pub fn r1(&self) -> ExtendedReal<T> {
        self.x.hi
    }
    pub fn l2(&self) -> ExtendedReal<T> {
        self.y.lo
    }
    pub fn r2(&self) -> ExtendedReal<T> {
        self.y.hi
    }

    /// Right upper corner, with infinite sides replaced by the per-axis sentinel.
    pub fn corner(&self, sentinel: Sentinel<T>) -> (T, T) {
        let pick = |b: ExtendedReal<T>, s: T| if b.is_pos_inf() { s } else { b.value() };
        (pick(self.x.hi, sentinel.x), pick(self.y.hi, sentinel.y))
    }

    fn sort_key(
        &self,
    ) -> (
        ExtendedReal<T>,
        ExtendedReal<T>,
        bool,
        bool,
        ExtendedReal<T>,
        ExtendedReal<T>,
    ) {
        (
            self.x.lo,
            self.y.lo,
            self.x.lo_open,
            self.y.lo_open,
            self.x.hi,
            self.y.hi,
        )
    }
}

impl<T: Scalar> fmt::Display for CanonicalRectangle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = |o: bool| if o { '(' } else { '[' };
        write!(
            f,
            "{}{},{}]x{}{},{}]",
            open(self.x.lo_open),
            self.x.lo,
            self.x.hi,
            open(self.y.lo_open),
            self.y.lo,
            self.y.hi
        )
    }
}

/// Finite stand-ins for `+inf` upper bounds, one per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sentinel<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Sentinel<T> {
    /// Largest finite coordinate on each axis plus one.
    pub fn for_dataset(data: &Dataset<T>) -> Self {
        let [mx, my] = data.max_finite();
        Self {
            x: mx.unwrap_or_else(T::zero) + T::one(),
            y: my.unwrap_or_else(T::zero) + T::one(),
        }
    }
}

struct AtomAxis<T> {
    values: Vec<T>,
}

impl<T: Scalar> AtomAxis<T> {
    fn new(intervals: impl Iterator<Item = Interval<T>>) -> Self {
        let mut values: Vec<T> = Vec::new();
        for iv in intervals {
            for b in [iv.lo, iv.hi] {
                if b.is_finite() {
                    values.push(b.value());
                }
            }
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite bounds"));
        values.dedup();
        Self { values }
    }

    fn n_atoms(&self) -> usize {
        2 * self.values.len() + 1
    }

    fn index(&self, v: T) -> usize {
        self.values
            .binary_search_by(|p| p.partial_cmp(&v).expect("finite bounds"))
            .expect("bound present in axis")
    }

    fn lo_atom(&self, iv: &Interval<T>) -> usize {
        if iv.lo.is_neg_inf() {
            0
        } else {
            let i = self.index(iv.lo.value());
            if iv.lo_open {
                2 * i + 2
            } else {
                2 * i + 1
            }
        }
    }

    fn hi_atom(&self, iv: &Interval<T>) -> usize {
        if iv.hi.is_pos_inf() {
            2 * self.values.len()
        } else {
            2 * self.index(iv.hi.value()) + 1
        }
    }

    /// Interval spanned by the atom range `lo..=hi`.
    fn interval(&self, lo: usize, hi: usize) -> Interval<T> {
        let (lo_b, lo_open) = if lo == 0 {
            (ExtendedReal::neg_inf(), false)
        } else if lo % 2 == 1 {
            (ExtendedReal::finite(self.values[lo / 2]), false)
        } else {
            (ExtendedReal::finite(self.values[lo / 2 - 1]), true)
        };
        let hi_b = if hi == 2 * self.values.len() {
            ExtendedReal::pos_inf()
        } else {
            // closed upper bounds always land on a value atom; a gap rounds up to its sup
            ExtendedReal::finite(self.values[hi / 2])
        };
        Interval {
            lo: lo_b,
            hi: hi_b,
            lo_open,
        }
    }
}

/// All maximal intersection rectangles of the dataset, sorted by `(l1, l2)`.
///
/// A cell's covering set `C` is maximal exactly when every cell of the intersection
/// rectangle `I_C` is covered by `|C|` rectangles; that is checked in O(1) per cell
/// with 2-D prefix sums of the coverage counts.
pub fn maximal_intersections<T: Scalar>(data: &Dataset<T>) -> Vec<CanonicalRectangle<T>> {
    let rects = data.rectangles();
    let ax = AtomAxis::new(rects.iter().map(|r| r.x));
    let ay = AtomAxis::new(rects.iter().map(|r| r.y));
    let (nx, ny) = (ax.n_atoms(), ay.n_atoms());

    let ranges: Vec<[usize; 4]> = rects
        .iter()
        .map(|r| {
            [
                ax.lo_atom(&r.x),
                ax.hi_atom(&r.x),
                ay.lo_atom(&r.y),
                ay.hi_atom(&r.y),
            ]
        })
        .collect();

    // coverage counts via a 2-D difference array
    let stride = ny + 1;
    let mut diff = vec![0i64; (nx + 1) * stride];
    for &[x0, x1, y0, y1] in &ranges {
        diff[x0 * stride + y0] += 1;
        diff[(x1 + 1) * stride + y0] -= 1;
        diff[x0 * stride + y1 + 1] -= 1;
        diff[(x1 + 1) * stride + y1 + 1] += 1;
    }
    let mut count = vec![0i64; nx * ny];
    for i in 0..nx {
        let mut run = 0i64;
        for j in 0..ny {
            run += diff[i * stride + j];
            count[i * ny + j] = run + if i > 0 { count[(i - 1) * ny + j] } else { 0 };
        }
    }
    // prefix sums of counts: pre[(i+1)*(ny+1) + (j+1)] = sum over cells <= (i, j)
    let mut pre = vec![0i64; (nx + 1) * stride];
    for i in 0..nx {
        for j in 0..ny {
            pre[(i + 1) * stride + j + 1] =
                count[i * ny + j] + pre[i * stride + j + 1] + pre[(i + 1) * stride + j]
                    - pre[i * stride + j];
        }
    }
    let block_sum = |x0: usize, x1: usize, y0: usize, y1: usize| {
        pre[(x1 + 1) * stride + y1 + 1] - pre[x0 * stride + y1 + 1] - pre[(x1 + 1) * stride + y0]
            + pre[x0 * stride + y0]
    };

    // the upper-right cell of any intersection sits on an upper-bound atom of both axes
    let mut hi_x = vec![false; nx];
    let mut hi_y = vec![false; ny];
    for r in &ranges {
        hi_x[r[1]] = true;
        hi_y[r[3]] = true;
    }

    let mut out = Vec::new();
    for i in (0..nx).filter(|&i| hi_x[i]) {
        for j in (0..ny).filter(|&j| hi_y[j]) {
            let c = count[i * ny + j];
            if c == 0 {
                continue;
            }
            let mut bounds = [0usize, usize::MAX, 0usize, usize::MAX];
            for r in ranges
                .iter()
                .filter(|r| r[0] <= i && i <= r[1] && r[2] <= j && j <= r[3])
            {
                bounds[0] = bounds[0].max(r[0]);
                bounds[1] = bounds[1].min(r[1]);
                bounds[2] = bounds[2].max(r[2]);
                bounds[3] = bounds[3].min(r[3]);
            }
            let [x0, x1, y0, y1] = bounds;
            if x1 != i || y1 != j {
                continue;
            }
            let area = ((x1 - x0 + 1) * (y1 - y0 + 1)) as i64;
            if block_sum(x0, x1, y0, y1) == c * area {
                out.push(CanonicalRectangle {
                    x: ax.interval(x0, x1),
                    y: ay.interval(y0, y1),
                });
            }
        }
    }
    out.sort_by_key(|c| c.sort_key());
    out
}

/// Right upper corners of the canonical rectangles, using the dataset's sentinels.
pub fn canonical_corners<T: Scalar>(
    data: &Dataset<T>,
    canon: &[CanonicalRectangle<T>],
) -> Vec<(T, T)> {
    let s = Sentinel::for_dataset(data);
    canon.iter().map(|c| c.corner(s)).collect()
}

/// Canonical rectangles in the rectangle CSV layout, without the frequency column.
pub fn canonical_to_csv<T: Scalar>(canon: &[CanonicalRectangle<T>]) -> String {
    let lo = |iv: &Interval<T>| {
        if iv.lo_open {
            format!(">{}", iv.lo)
        } else {
            iv.lo.to_string()
        }
    };
    let mut out = String::from("L1,R1,L2,R2\n");
    for c in canon {
        out.push_str(&format!(
            "{},{},{},{}\n",
            lo(&c.x),
            c.x.hi,
            lo(&c.y),
            c.y.hi
        ));
    }
    out
}

/// Binary matrix with `H[i][j] = 1` iff candidate `j` lies in observation rectangle `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    /// Row-major.
    cells: Vec<bool>,
}

impl IncidenceMatrix {
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|row| row.len() == c),
            "ragged incidence rows"
        );
        Self {
            rows: r,
            cols: c,
            cells: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    /// Indices of rows containing no candidate.
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .filter(|&i| !self.row(i).iter().any(|&b| b))
            .collect()
    }

    /// Copy with the columns reordered: new column `k` is old column `order[k]`.
    pub fn select_columns(&self, order: &[usize]) -> Self {
        let mut cells = Vec::with_capacity(self.rows * order.len());
        for i in 0..self.rows {
            let row = self.row(i);
            cells.extend(order.iter().map(|&j| row[j]));
        }
        Self {
            rows: self.rows,
            cols: order.len(),
            cells,
        }
    }
}

/// Membership of each candidate point in each observation rectangle.
pub fn incidence<T: Scalar>(data: &Dataset<T>, points: &[(T, T)]) -> IncidenceMatrix {
    let rects = data.rectangles();
    let mut cells = Vec::with_capacity(rects.len() * points.len());
    for r in rects {
        cells.extend(points.iter().map(|&(x, y)| r.contains(x, y)));
    }
    IncidenceMatrix {
        rows: rects.len(),
        cols: points.len(),
        cells,
    }
}
