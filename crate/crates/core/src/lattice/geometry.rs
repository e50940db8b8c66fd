//! Cell flags and streaming links: periodic wrap-around and halfway
//! bounce-back at solid faces and domain walls.

use super::d2q9::{OPPOSITE, Q, VELOCITIES};
use crate::error::{Error, Result};

/// Treatment of one pair of opposite domain edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Periodic,
    /// No-slip walls located half a cell outside the first and last cell rows.
    Wall,
}

impl EdgeKind {
    pub fn name(&self) -> &'static str {
        match self {
            EdgeKind::Periodic => "periodic",
            EdgeKind::Wall => "wall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Boundaries {
    pub x: EdgeKind,
    pub y: EdgeKind,
}

impl Boundaries {
    pub const PERIODIC: Boundaries = Boundaries {
        x: EdgeKind::Periodic,
        y: EdgeKind::Periodic,
    };

    /// Periodic along x, walls at the bottom and top.
    pub const CHANNEL: Boundaries = Boundaries {
        x: EdgeKind::Periodic,
        y: EdgeKind::Wall,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFlag {
    Fluid,
    Solid,
}

/// Marker in the link table: the population is reflected at a solid face.
pub(crate) const BOUNCE: u32 = u32::MAX;

/// Grid, flags, and for every fluid cell and direction the cell that
/// population streams in from.
#[derive(Debug, Clone)]
pub struct Geometry {
    nx: usize,
    ny: usize,
    boundaries: Boundaries,
    flags: Vec<CellFlag>,
    sources: Vec<[u32; Q]>,
    destinations: Vec<[u32; Q]>,
}

impl Geometry {
    pub fn new(nx: usize, ny: usize, boundaries: Boundaries, flags: Vec<CellFlag>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Geometry(format!("empty grid {nx} x {ny}")));
        }
        if nx * ny >= BOUNCE as usize {
            return Err(Error::Geometry(format!("grid {nx} x {ny} too large")));
        }
        if flags.len() != nx * ny {
            return Err(Error::Geometry(format!(
                "{} cell flags for a {nx} x {ny} grid",
                flags.len()
            )));
        }
        let fluid = flags.iter().filter(|f| **f == CellFlag::Fluid).count();
        if fluid == 0 {
            return Err(Error::Geometry("no fluid cells".into()));
        }
        let mut geometry = Self {
            nx,
            ny,
            boundaries,
            flags,
            sources: vec![[BOUNCE; Q]; nx * ny],
            destinations: vec![[BOUNCE; Q]; nx * ny],
        };
        for y in 0..ny {
            for x in 0..nx {
                let cell = y * nx + x;
                if geometry.flags[cell] == CellFlag::Solid {
                    continue;
                }
                for q in 0..Q {
                    let source = geometry.upstream(x, y, q);
                    geometry.sources[cell][q] = source;
                    if source != BOUNCE {
                        geometry.destinations[source as usize][q] = cell as u32;
                    }
                }
            }
        }
        Ok(geometry)
    }

    /// All-fluid grid.
    pub fn open(nx: usize, ny: usize, boundaries: Boundaries) -> Result<Self> {
        Self::new(nx, ny, boundaries, vec![CellFlag::Fluid; nx * ny])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn boundaries(&self) -> Boundaries {
        self.boundaries
    }

    pub fn flags(&self) -> &[CellFlag] {
        &self.flags
    }

    pub fn is_fluid(&self, cell: usize) -> bool {
        self.flags[cell] == CellFlag::Fluid
    }

    pub fn fluid_count(&self) -> usize {
        self.flags.iter().filter(|f| **f == CellFlag::Fluid).count()
    }

    #[cfg(test)]
    pub(crate) fn sources(&self) -> &[[u32; Q]] {
        &self.sources
    }

    /// Push form of [`sources`](Self::sources): the cell that population `q`
    /// of a fluid cell moves to, or [`BOUNCE`] when it is reflected back into
    /// direction `OPPOSITE[q]` of the same cell.
    pub(crate) fn destinations(&self) -> &[[u32; Q]] {
        &self.destinations
    }

    /// Upstream cell of population `q` arriving at `(x, y)`, or [`BOUNCE`]
    /// when the link crosses a wall or a solid cell.
    fn upstream(&self, x: usize, y: usize, q: usize) -> u32 {
        let sx = x as i64 - VELOCITIES[q][0] as i64;
        let sy = y as i64 - VELOCITIES[q][1] as i64;
        let Some(sx) = wrap(sx, self.nx, self.boundaries.x) else {
            return BOUNCE;
        };
        let Some(sy) = wrap(sy, self.ny, self.boundaries.y) else {
            return BOUNCE;
        };
        let source = sy * self.nx + sx;
        if self.flags[source] == CellFlag::Solid {
            BOUNCE
        } else {
            source as u32
        }
    }

    /// Number of links whose population is reflected.
    pub fn bounce_links(&self) -> usize {
        self.sources
            .iter()
            .enumerate()
            .filter(|(c, _)| self.is_fluid(*c))
            .map(|(_, s)| s.iter().filter(|&&v| v == BOUNCE).count())
            .sum()
    }
}

/// Periodic wrap of a coordinate; `None` when it leaves a walled domain.
pub fn wrap(i: i64, n: usize, kind: EdgeKind) -> Option<usize> {
    let n = n as i64;
    match kind {
        EdgeKind::Periodic => Some(i.rem_euclid(n) as usize),
        EdgeKind::Wall if (0..n).contains(&i) => Some(i as usize),
        EdgeKind::Wall => None,
    }
}

/// Moves post-collision populations one link along their velocity.
///
/// Periodic pairs hand populations across the domain edge; links that end in
/// a solid cell or a wall return the population in the opposite direction to
/// the cell it left (halfway bounce-back).
#[inline(always)]
pub(crate) fn pull(sources: &[u32; Q], post: &[[f64; Q]], cell: usize, out: &mut [f64; Q]) {
    for q in 0..Q {
        let s = sources[q];
        out[q] = if s == BOUNCE {
            post[cell][OPPOSITE[q]]
        } else {
            post[s as usize][q]
        };
    }
}

/// Streams every fluid cell of `post` into `out` (serial reference form).
pub fn stream(geometry: &Geometry, post: &[[f64; Q]], out: &mut [[f64; Q]]) {
    for (cell, dst) in out.iter_mut().enumerate() {
        if geometry.is_fluid(cell) {
            pull(&geometry.sources[cell], post, cell, dst);
        }
    }
}
