//! On-disk artifacts: chain files, level and coupling tables, wavefunction
//! dumps and SVG figures.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, PulseTrain};
use crate::coupling::CouplingMap;
use crate::dvr::{Manifold, RadialGrid, VibrationalLevel};
use crate::error::{Error, Result};
use crate::state::{ManifoldKey, StateId, Surface};
use crate::trace::PopulationTrace;
use crate::units::{PICOSECOND, WAVENUMBER};

const CHAIN_FORMAT: &str = "pingpong-chain/1";
const WAVEFUNCTION_MAGIC: &[u8; 8] = b"PPWAVEF1";

/// A designed chain with its pulse train, shared by every dynamics tier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    pub format: String,
    pub chain: ChainSpec<f64>,
    pub train: PulseTrain<f64>,
}

impl ChainFile {
    pub fn new(chain: ChainSpec<f64>, train: PulseTrain<f64>) -> Result<Self> {
        train.check_against(&chain)?;
        Ok(Self {
            format: CHAIN_FORMAT.into(),
            chain,
            train,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain files always serialize") + "\n"
    }

    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        let parsed: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if parsed.format != CHAIN_FORMAT {
            return Err(Error::Invalid(format!(
                "{source_name}: unsupported chain format {:?}",
                parsed.format
            )));
        }
        // Re-validate structure; the stored DMEs already passed their threshold.
        let checked = ChainSpec::new(parsed.chain.states.clone(), parsed.chain.dmes.clone(), 0.0)?;
        if checked
            .angular
            .iter()
            .zip(&parsed.chain.angular)
            .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::Invalid(format!("{source_name}: angular factors do not match the states")));
        }
        Self::new(checked, parsed.train)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::format(path, e)
}

/// One row per level: `state,surface,v,J,energy_au,energy_cm1,bound`.
pub fn write_levels_csv<W: Write>(manifold: &Manifold<f64>, sink: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["state", "surface", "v", "J", "energy_au", "energy_cm1", "bound"])?;
    for level in &manifold.levels {
        w.write_record([
            level.id.to_string(),
            level.id.surface.to_string(),
            level.id.v.to_string(),
            level.id.j.to_string(),
            format!("{:.15e}", level.energy),
            format!("{:.6}", level.energy / WAVENUMBER),
            level.bound.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_levels_csv(manifold: &Manifold<f64>, path: &Path) -> Result<()> {
    let file = create(path)?;
    write_levels_csv(manifold, file).map_err(csv_error(path))
}

/// DME matrix with a header of column states and the row state in the first column.
pub fn write_dme_csv<W: Write>(map: &CouplingMap<f64>, sink: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![format!("{}\\{}", map.rows, map.cols)];
    header.extend((0..map.values.ncols()).map(|v| StateId::new(map.cols.surface, v, map.cols.j).to_string()));
    w.write_record(&header)?;
    for (v, row) in map.values.rows().into_iter().enumerate() {
        let mut record = vec![StateId::new(map.rows.surface, v, map.rows.j).to_string()];
        record.extend(row.iter().map(|d| format!("{d:.12e}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dme_csv(map: &CouplingMap<f64>, path: &Path) -> Result<()> {
    let file = create(path)?;
    write_dme_csv(map, file).map_err(csv_error(path))
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(file))
}

/// Little-endian dump of a manifold: magic, surface, J, grid, then per level
/// its energy, bound flag and samples.
pub fn write_wavefunctions<W: Write>(manifold: &Manifold<f64>, mut sink: W) -> std::io::Result<()> {
    let grid = &manifold.grid;
    sink.write_all(WAVEFUNCTION_MAGIC)?;
    let surface: u32 = match manifold.key.surface {
        Surface::Ground => 0,
        Surface::Excited => 1,
    };
    sink.write_all(&surface.to_le_bytes())?;
    sink.write_all(&manifold.key.j.to_le_bytes())?;
    sink.write_all(&(grid.len() as u64).to_le_bytes())?;
    sink.write_all(&grid.r_min().to_le_bytes())?;
    sink.write_all(&grid.r_max().to_le_bytes())?;
    sink.write_all(&(manifold.levels.len() as u64).to_le_bytes())?;
    for level in &manifold.levels {
        sink.write_all(&level.energy.to_le_bytes())?;
        sink.write_all(&[level.bound as u8])?;
        for x in &level.wavefunction {
            sink.write_all(&x.to_le_bytes())?;
        }
    }
    sink.flush()
}

pub fn read_wavefunctions<R: Read>(mut source: R, name: &str) -> Result<Manifold<f64>> {
    let bad = |message: &str| Error::format(name, message);
    let io = |e: std::io::Error| Error::format(name, e);
    let mut magic = [0u8; 8];
    source.read_exact(&mut magic).map_err(io)?;
    if &magic != WAVEFUNCTION_MAGIC {
        return Err(bad("not a wavefunction dump"));
    }
    let mut word = [0u8; 4];
    let mut long = [0u8; 8];
    let mut u32_of = |s: &mut R| -> Result<u32> {
        s.read_exact(&mut word).map_err(io)?;
        Ok(u32::from_le_bytes(word))
    };
    let surface = match u32_of(&mut source)? {
        0 => Surface::Ground,
        1 => Surface::Excited,
        _ => return Err(bad("unknown surface tag")),
    };
    let j = u32_of(&mut source)?;
    let mut u64_of = |s: &mut R| -> Result<u64> {
        s.read_exact(&mut long).map_err(io)?;
        Ok(u64::from_le_bytes(long))
    };
    let points = u64_of(&mut source)? as usize;
    let r_min = f64::from_bits(u64_of(&mut source)?);
    let r_max = f64::from_bits(u64_of(&mut source)?);
    let count = u64_of(&mut source)? as usize;
    let grid = RadialGrid::new(r_min, r_max, points)?;
    let mut levels = Vec::with_capacity(count);
    for v in 0..count {
        let energy = f64::from_bits(u64_of(&mut source)?);
        let mut flag = [0u8; 1];
        source.read_exact(&mut flag).map_err(io)?;
        let wavefunction = (0..points)
            .map(|_| u64_of(&mut source).map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        levels.push(VibrationalLevel {
            id: StateId::new(surface, v, j),
            energy,
            bound: flag[0] != 0,
            wavefunction,
            grid,
        });
    }
    Ok(Manifold {
        key: ManifoldKey::new(surface, j),
        grid,
        levels,
    })
}

pub fn save_wavefunctions(manifold: &Manifold<f64>, path: &Path) -> Result<()> {
    let file = create(path)?;
    write_wavefunctions(manifold, file).map_err(|e| Error::io(path, e))
}

pub fn load_wavefunctions(path: &Path) -> Result<Manifold<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_wavefunctions(std::io::BufReader::new(file), &path.display().to_string())
}

/// `|d|²` heatmap of a coupling map, rows down and columns across.
pub fn dme_heatmap_svg(map: &CouplingMap<f64>) -> String {
    let squared = map.squared();
    let (rows, cols) = squared.dim();
    let peak = squared.iter().fold(0.0f64, |m, x| m.max(*x));
    let cell = (480.0 / rows.max(cols).max(1) as f64).clamp(2.0, 24.0);
    let (left, top) = (60.0, 40.0);
    let width = left + cell * cols as f64 + 20.0;
    let height = top + cell * rows as f64 + 50.0;
    let mut svg = svg_open(width, height);
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="20" font-size="13">|d|² for {} (rows) and {} (columns), peak {peak:.3e} a.u.</text>"#,
        map.rows, map.cols
    );
    for ((r, c), value) in squared.indexed_iter() {
        let x = if peak > 0.0 { value / peak } else { 0.0 };
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}"/>"#,
            left + cell * c as f64,
            top + cell * r as f64,
            colormap(x)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="{:.1}" font-size="12">v ({}) →</text>"#,
        top + cell * rows as f64 + 20.0,
        map.cols
    );
    let _ = writeln!(
        svg,
        r#"<text x="12" y="{:.1}" font-size="12" transform="rotate(-90 12 {:.1})">v ({}) →</text>"#,
        top + 60.0,
        top + 60.0,
        map.rows
    );
    svg.push_str("</svg>\n");
    svg
}

/// Population traces against time in ps; later traces are dashed.
pub fn trace_plot_svg(title: &str, traces: &[(&str, &PopulationTrace<f64>)]) -> String {
    let (w, h) = (760.0, 440.0);
    let (left, right, top, bottom) = (60.0, 180.0, 40.0, 50.0);
    let (t_lo, t_hi) = traces
        .iter()
        .filter(|(_, t)| !t.is_empty())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, t)| {
            (lo.min(t.times[0]), hi.max(t.times[t.len() - 1]))
        });
    let (t_lo, t_hi) = if t_hi > t_lo { (t_lo, t_hi) } else { (0.0, 1.0) };
    let px = |t: f64| left + (t - t_lo) / (t_hi - t_lo) * (w - left - right);
    let py = |p: f64| top + (1.0 - p) * (h - top - bottom);
    let mut svg = svg_open(w, h);
    let _ = writeln!(svg, r#"<text x="{left}" y="22" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        svg,
        r##"<rect x="{left}" y="{top}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        w - left - right,
        h - top - bottom
    );
    for k in 0..=4 {
        let p = k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{p:.2}</text>"#,
            left - 6.0,
            py(p) + 4.0
        );
        let t = t_lo + p * (t_hi - t_lo);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{:.2}</text>"#,
            px(t),
            h - bottom + 16.0,
            t / PICOSECOND
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">time (ps)</text>"#,
        px(0.5 * (t_lo + t_hi)),
        h - 12.0
    );
    let dashes = ["", "6 3", "2 3", "8 3 2 3"];
    let mut legend_y = top + 10.0;
    for (n, (label, trace)) in traces.iter().enumerate() {
        let dash = dashes[n % dashes.len()];
        for (i, state) in trace.states.iter().enumerate() {
            let color = palette(i);
            let points: String = trace
                .times
                .iter()
                .zip(&trace.populations)
                .map(|(t, row)| format!("{:.2},{:.2} ", px(*t), py(row[i])))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="{dash}" points="{}"/>"#,
                points.trim_end()
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/><text x="{:.1}" y="{:.1}" font-size="11">{} {state}</text>"#,
                w - right + 10.0,
                w - right + 34.0,
                w - right + 40.0,
                legend_y + 4.0,
                escape(label)
            );
            legend_y += 15.0;
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">
<rect width="100%" height="100%" fill="white"/>
"#
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn palette(i: usize) -> &'static str {
    const COLORS: [&str; 8] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
    ];
    COLORS[i % COLORS.len()]
}

/// White through blue to near-black for `x` in [0, 1].
fn colormap(x: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 4] = [
        (0.0, [255.0, 255.0, 255.0]),
        (0.25, [158.0, 202.0, 225.0]),
        (0.6, [33.0, 113.0, 181.0]),
        (1.0, [8.0, 29.0, 60.0]),
    ];
    let x = x.clamp(0.0, 1.0);
    let k = STOPS.windows(2).position(|w| x <= w[1].0).unwrap_or(STOPS.len() - 2);
    let ((x0, c0), (x1, c1)) = (STOPS[k], STOPS[k + 1]);
    let f = (x - x0) / (x1 - x0);
    let c: Vec<u8> = (0..3).map(|i| (c0[i] + f * (c1[i] - c0[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{design_train, ChainState, TrainDesign};
    use crate::coupling::coupling_map;
    use crate::dvr::solve_manifold;
    use crate::synthetic::{toy_system, TOY_GRID};
    use crate::state::Surface::{Excited as A, Ground as X};

    fn small_chain() -> ChainFile {
        let states = vec![
            ChainState { id: StateId::new(X, 2, 2), energy: 0.02 },
            ChainState { id: StateId::new(A, 1, 1), energy: 0.11 },
            ChainState { id: StateId::new(X, 0, 0), energy: 0.005 },
        ];
        let chain = ChainSpec::new(states, vec![0.4, -0.7], 1e-4).unwrap();
        let train = design_train(&chain, &TrainDesign::complete_transfer(1000.0)).unwrap();
        ChainFile::new(chain, train).unwrap()
    }

    #[test]
    fn chain_file_roundtrip_and_validation() {
        let file = small_chain();
        let back = ChainFile::from_json(&file.to_json(), "mem").unwrap();
        assert_eq!(back, file);
        let tampered = file.to_json().replace("\"X:0:0\"", "\"X:0:1\"");
        assert!(ChainFile::from_json(&tampered, "mem").unwrap_err().is_config());
        let wrong = file.to_json().replace(CHAIN_FORMAT, "other/9");
        assert!(ChainFile::from_json(&wrong, "mem").is_err());
        assert!(matches!(ChainFile::from_json("{", "mem"), Err(Error::Parse { .. })));
    }

    #[test]
    fn wavefunction_dump_roundtrip() {
        let sys = toy_system::<f64>();
        let grid = RadialGrid::new(TOY_GRID.0, TOY_GRID.1, 120).unwrap();
        let m = solve_manifold(&sys, X, 3, &grid, Some(4)).unwrap();
        let mut buf = Vec::new();
        write_wavefunctions(&m, &mut buf).unwrap();
        let back = read_wavefunctions(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.key, m.key);
        assert_eq!(back.levels.len(), 4);
        for (a, b) in back.levels.iter().zip(&m.levels) {
            assert_eq!(a.energy, b.energy);
            assert_eq!(a.wavefunction, b.wavefunction);
            assert_eq!(a.id, b.id);
        }
        assert!(read_wavefunctions(&buf[..20], "mem").is_err());
        assert!(read_wavefunctions(&b"NOTMAGIC........"[..], "mem").is_err());
    }

    #[test]
    fn tables_and_figures() {
        let sys = toy_system::<f64>();
        let grid = RadialGrid::new(TOY_GRID.0, TOY_GRID.1, 120).unwrap();
        let x = solve_manifold(&sys, X, 0, &grid, Some(3)).unwrap();
        let a = solve_manifold(&sys, A, 1, &grid, Some(2)).unwrap();
        let mut levels = Vec::new();
        write_levels_csv(&x, &mut levels).unwrap();
        let text = String::from_utf8(levels).unwrap();
        assert!(text.starts_with("state,surface,v,J,energy_au,energy_cm1,bound\nX:0:0,X,0,0,"));
        assert_eq!(text.lines().count(), 4);

        let map = coupling_map(&x, &a, &sys.dipole).unwrap();
        let mut dme = Vec::new();
        write_dme_csv(&map, &mut dme).unwrap();
        let text = String::from_utf8(dme).unwrap();
        assert!(text.starts_with("X:J0\\A:J1,A:0:1,A:1:1\nX:0:0,"));

        let svg = dme_heatmap_svg(&map);
        assert_eq!(svg.matches("<rect x=").count(), 6);
        let mut trace = PopulationTrace::new(vec![StateId::new(X, 0, 0)]);
        trace.push(0.0, vec![1.0], 0.0, 0.0);
        trace.push(100.0, vec![0.5], 0.0, 0.0);
        let svg = trace_plot_svg("a < b", &[("rwa", &trace), ("grid", &trace)]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert_eq!(colormap(0.0), "#ffffff");
        assert_eq!(colormap(1.0), "#081d3c");
    }
}
