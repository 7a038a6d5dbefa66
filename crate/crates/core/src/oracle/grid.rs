use crate::error::{Error, Result};
use crate::power::PowerProfile;
use crate::system::{Boundary, SystemConfig};

/// Body faces must sit within this fraction of a cell of a grid plane.
pub const ALIGN_TOLERANCE: f64 = 0.01;

/// Minimum number of cells a body must span along every axis.
pub const MIN_CELLS_PER_AXIS: usize = 2;

/// Safety factor applied to the explicit stability limit.
pub const SAFETY_FACTOR: f64 = 0.9;

const MAX_CELLS: usize = 1 << 26;

/// Uniform voxel discretization of a [`SystemConfig`].
///
/// Face conductances are stored once per interior face (`g[axis][i]` couples
/// cell `i` with its `+axis` neighbour), so every exchanged watt leaves one
/// cell and enters the other with exactly opposite sign.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    pub(crate) dx: f64,
    pub(crate) dims: [usize; 3],
    pub(crate) origin: [f64; 3],
    /// Owning body per cell, `None` for void.
    pub(crate) cell_body: Vec<Option<usize>>,
    /// Heat capacity per cell (J/K), zero for void.
    pub(crate) capacity: Vec<f64>,
    /// 1/capacity, zero for void.
    pub(crate) inv_capacity: Vec<f64>,
    pub(crate) temperature: Vec<f64>,
    /// Source power per cell (W).
    pub(crate) source: Vec<f64>,
    pub(crate) face_g: [Vec<f64>; 3],
    /// Conductance to ambient through exposed faces (W/K).
    pub(crate) ambient_g: Vec<f64>,
    exposed_faces: Vec<u8>,
    pub(crate) ambient: f64,
    pub(crate) initial_temperature: f64,
    pub(crate) body_cells: Vec<Vec<usize>>,
    pub(crate) probe_cells: Vec<Vec<usize>>,
    pub(crate) powers: Vec<PowerProfile>,
    /// Power currently painted per body (W).
    applied_power: Vec<f64>,
    pub(crate) body_ids: Vec<String>,
    pub(crate) scratch: Vec<f64>,
    stable_dt: f64,
}

fn aligned_index(value: f64, what: &str) -> Result<usize> {
    let rounded = value.round();
    if (value - rounded).abs() > ALIGN_TOLERANCE || rounded < 0.0 {
        return Err(Error::GeometryUnresolvable(format!(
            "{what} is {value:.4} cells, not a whole number of cells"
        )));
    }
    Ok(rounded as usize)
}

/// Cells along one axis that contain `p`. A point lying on a face shared by
/// two cells of the same body returns both, so that body centres on even
/// cell counts are sampled symmetrically.
fn probe_span(p: f64, lo: usize, n: usize, origin: f64, dx: f64) -> Vec<usize> {
    let u = (p - origin) / dx;
    let r = u.round();
    if (u - r).abs() < 1e-6 {
        let r = r as usize;
        if r > lo && r < lo + n {
            return vec![r - 1, r];
        }
    }
    let f = (u.floor().max(0.0) as usize).clamp(lo, lo + n - 1);
    vec![f]
}

impl VoxelGrid {
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Minimum corner of the grid (m).
    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_count(&self) -> usize {
        self.capacity.len()
    }

    pub fn solid_cell_count(&self) -> usize {
        self.cell_body.iter().filter(|b| b.is_some()).count()
    }

    pub fn body_ids(&self) -> &[String] {
        &self.body_ids
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperature
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacity
    }

    pub fn cell_body(&self, index: usize) -> Option<usize> {
        self.cell_body[index]
    }

    pub fn body_cells(&self, body: usize) -> &[usize] {
        &self.body_cells[body]
    }

    /// Source density of a cell in W/m³.
    pub fn source_density(&self, index: usize) -> f64 {
        self.source[index] / self.dx.powi(3)
    }

    pub fn initial_temperature(&self) -> f64 {
        self.initial_temperature
    }

    /// Largest explicit time step the grid accepts.
    pub fn stable_dt(&self) -> f64 {
        self.stable_dt
    }

    /// Temperature at a body's probe (mean of the probe cells).
    pub fn probe_temperature(&self, body: usize) -> f64 {
        let cells = &self.probe_cells[body];
        cells.iter().map(|&c| self.temperature[c]).sum::<f64>() / cells.len() as f64
    }

    /// Capacitance-weighted mean temperature of a body.
    pub fn body_mean_temperature(&self, body: usize) -> f64 {
        let (mut e, mut c) = (0.0, 0.0);
        for &i in &self.body_cells[body] {
            e += self.capacity[i] * self.temperature[i];
            c += self.capacity[i];
        }
        e / c
    }

    /// Σ C_cell·(T_cell − T0) in joules.
    pub fn stored_energy(&self) -> f64 {
        self.capacity
            .iter()
            .zip(&self.temperature)
            .map(|(c, t)| c * (t - self.initial_temperature))
            .sum()
    }

    /// Heat capacity the grid assigns to a body.
    pub fn body_capacitance(&self, body: usize) -> f64 {
        self.body_cells[body].iter().map(|&i| self.capacity[i]).sum()
    }

    /// Total area of a body's faces that touch void or the grid boundary (m²).
    pub fn exposed_area(&self, body: usize) -> f64 {
        let faces: usize = self.body_cells[body]
            .iter()
            .map(|&i| self.exposed_faces[i] as usize)
            .sum();
        faces as f64 * self.dx * self.dx
    }

    /// Overwrites the source term from each body's schedule at time `t`.
    pub(crate) fn refresh_sources(&mut self, t: f64) {
        for (body, cells) in self.body_cells.iter().enumerate() {
            let watts = self.powers[body].power_at(t);
            if watts == self.applied_power[body] {
                continue;
            }
            self.applied_power[body] = watts;
            let per_cell = watts / cells.len() as f64;
            for &c in cells {
                self.source[c] = per_cell;
            }
        }
    }
}

/// Paints `system` onto a uniform grid of spacing `dx`.
///
/// The grid spans the bounding box of all bodies. Temperatures start at the
/// system's initial temperature and sources are zero until the first step.
pub fn build_grid(system: &SystemConfig, dx: f64) -> Result<VoxelGrid> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::config("dx", format!("must be positive, got {dx}")));
    }
    let bodies = system.bodies();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for b in bodies {
        let (o, m) = (b.bounds().origin, b.bounds().max_corner());
        for a in 0..3 {
            lo[a] = lo[a].min(o[a]);
            hi[a] = hi[a].max(m[a]);
        }
    }
    let mut dims = [0usize; 3];
    for a in 0..3 {
        dims[a] = aligned_index((hi[a] - lo[a]) / dx, "system extent")?;
    }
    let n_cells = dims.iter().product::<usize>();
    if n_cells > MAX_CELLS {
        return Err(Error::GeometryUnresolvable(format!(
            "{n_cells} cells exceeds the limit of {MAX_CELLS}"
        )));
    }

    let mut cell_body = vec![None; n_cells];
    let mut capacity = vec![0.0; n_cells];
    let mut conductivity = vec![0.0; n_cells];
    let mut body_cells = Vec::with_capacity(bodies.len());
    let mut probe_cells = Vec::with_capacity(bodies.len());
    let cell_volume = dx * dx * dx;

    for (bi, body) in bodies.iter().enumerate() {
        let bounds = body.bounds();
        let mut start = [0usize; 3];
        let mut count = [0usize; 3];
        for a in 0..3 {
            let what = format!("body `{}` axis {a}", body.id());
            start[a] = aligned_index((bounds.origin[a] - lo[a]) / dx, &format!("{what} offset"))?;
            count[a] = aligned_index(bounds.size[a] / dx, &format!("{what} size"))?;
            if count[a] < MIN_CELLS_PER_AXIS {
                return Err(Error::GeometryUnresolvable(format!(
                    "{what} spans {} cell(s); at least {MIN_CELLS_PER_AXIS} are required",
                    count[a]
                )));
            }
        }
        let mut cells = Vec::with_capacity(count.iter().product());
        for z in start[2]..start[2] + count[2] {
            for y in start[1]..start[1] + count[1] {
                for x in start[0]..start[0] + count[0] {
                    let i = x + dims[0] * (y + dims[1] * z);
                    debug_assert!(cell_body[i].is_none(), "bodies overlap");
                    cell_body[i] = Some(bi);
                    capacity[i] = body.material().volumetric_heat_capacity() * cell_volume;
                    conductivity[i] = body.material().conductivity();
                    cells.push(i);
                }
            }
        }
        body_cells.push(cells);

        let probe = body.probe();
        let spans: Vec<Vec<usize>> = (0..3)
            .map(|a| probe_span(probe[a], start[a], count[a], lo[a], dx))
            .collect();
        let mut pc = Vec::new();
        for &z in &spans[2] {
            for &y in &spans[1] {
                for &x in &spans[0] {
                    pc.push(x + dims[0] * (y + dims[1] * z));
                }
            }
        }
        probe_cells.push(pc);
    }

    let (h, ambient) = match system.boundary() {
        Boundary::Insulated => (0.0, system.initial_temperature()),
        Boundary::Convection { h, ambient, .. } => (h, ambient),
    };
    let face_area = dx * dx;
    let mut face_g = [vec![0.0; n_cells], vec![0.0; n_cells], vec![0.0; n_cells]];
    let mut ambient_g = vec![0.0; n_cells];
    let mut exposed_faces = vec![0u8; n_cells];
    let strides = [1, dims[0], dims[0] * dims[1]];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let i = x + dims[0] * (y + dims[1] * z);
                let pos = [x, y, z];
                let solid = cell_body[i].is_some();
                for a in 0..3 {
                    let has_next = pos[a] + 1 < dims[a];
                    let has_prev = pos[a] > 0;
                    if has_next {
                        let j = i + strides[a];
                        if solid && cell_body[j].is_some() {
                            let (ka, kb) = (conductivity[i], conductivity[j]);
                            // harmonic mean conductivity over a distance dx
                            face_g[a][i] = 2.0 * ka * kb / (ka + kb) * dx;
                        }
                    }
                    if solid {
                        let open_next = !has_next || cell_body[i + strides[a]].is_none();
                        let open_prev = !has_prev || cell_body[i - strides[a]].is_none();
                        exposed_faces[i] += open_next as u8 + open_prev as u8;
                    }
                }
            }
        }
    }

    for (g, &faces) in ambient_g.iter_mut().zip(&exposed_faces) {
        *g = h * face_area * faces as f64;
    }

    let active_dims = dims.iter().filter(|&&n| n > 1).count().max(1) as f64;
    let mut limit = f64::INFINITY;
    for i in 0..n_cells {
        if cell_body[i].is_none() {
            continue;
        }
        let pos = [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])];
        // Largest face "conductivity": G/dx for solid faces, h·dx for exposed ones.
        let mut k_max: f64 = 0.0;
        for a in 0..3 {
            k_max = k_max.max(face_g[a][i] / dx);
            if pos[a] > 0 {
                k_max = k_max.max(face_g[a][i - strides[a]] / dx);
            }
        }
        if ambient_g[i] > 0.0 {
            k_max = k_max.max(h * dx);
        }
        if k_max > 0.0 {
            let rho_cp = capacity[i] / cell_volume;
            limit = limit.min(rho_cp * dx * dx / (2.0 * active_dims * k_max));
        }
    }

    Ok(VoxelGrid {
        dx,
        dims,
        origin: lo,
        cell_body,
        inv_capacity: capacity.iter().map(|&c| if c > 0.0 { 1.0 / c } else { 0.0 }).collect(),
        capacity,
        temperature: vec![system.initial_temperature(); n_cells],
        source: vec![0.0; n_cells],
        face_g,
        ambient_g,
        exposed_faces,
        ambient,
        initial_temperature: system.initial_temperature(),
        body_cells,
        probe_cells,
        powers: bodies.iter().map(|b| b.power().clone()).collect(),
        applied_power: vec![0.0; bodies.len()],
        body_ids: bodies.iter().map(|b| b.id().to_string()).collect(),
        scratch: vec![0.0; n_cells],
        stable_dt: SAFETY_FACTOR * limit,
    })
}

/// Free-function form of [`VoxelGrid::stable_dt`].
pub fn stable_dt(grid: &VoxelGrid) -> f64 {
    grid.stable_dt()
}
