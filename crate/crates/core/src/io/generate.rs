//! Fixture and lattice generators.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::calculus::BcKind;
use crate::error::{Error, Result};
use crate::space::{build_graph, make_domain, whole_space, Domain, MetricMeasureGraph, VertexField};

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    Path(usize),
    Cycle(usize),
    Grid2d { rows: usize, cols: usize },
    Image(PathBuf),
}

impl FromStr for GraphKind {
    type Err = Error;

    /// `path:N`, `cycle:N`, `grid2d:RxC`, `image:FILE.pgm`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognized generator `{s}`"));
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let size = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match kind {
            "path" => Ok(GraphKind::Path(size(arg)?)),
            "cycle" => Ok(GraphKind::Cycle(size(arg)?)),
            "grid2d" => {
                let (r, c) = arg.split_once(['x', 'X', ',']).ok_or_else(bad)?;
                Ok(GraphKind::Grid2d {
                    rows: size(r)?,
                    cols: size(c)?,
                })
            }
            "image" => Ok(GraphKind::Image(PathBuf::from(arg))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Path(n) => write!(f, "path:{n}"),
            GraphKind::Cycle(n) => write!(f, "cycle:{n}"),
            GraphKind::Grid2d { rows, cols } => write!(f, "grid2d:{rows}x{cols}"),
            GraphKind::Image(p) => write!(f, "image:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Arc<MetricMeasureGraph>,
    pub domain: Domain,
    /// Initial datum carried by the source (images only).
    pub u0: Option<VertexField>,
}

/// Builds the graph with uniform `weight` and `measure`. For Dirichlet the
/// outermost layer (path endpoints, grid ring) is exterior; otherwise the
/// domain is the whole graph.
pub fn generate(kind: &GraphKind, bc: BcKind, weight: f64, measure: f64) -> Result<Generated> {
    match kind {
        GraphKind::Path(n) => {
            let n = *n;
            need(n >= 1, "path needs at least one vertex")?;
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i, weight)).collect();
            let interior: Vec<usize> = if bc == BcKind::Dirichlet {
                need(n >= 3, "Dirichlet path needs at least three vertices")?;
                (1..n - 1).collect()
            } else {
                (0..n).collect()
            };
            assemble(vec![measure; n], &edges, &interior, None)
        }
        GraphKind::Cycle(n) => {
            let n = *n;
            need(n >= 3, "cycle needs at least three vertices")?;
            need(bc != BcKind::Dirichlet, "cycle has no boundary for Dirichlet data")?;
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, weight)).collect();
            assemble(vec![measure; n], &edges, &(0..n).collect::<Vec<_>>(), None)
        }
        GraphKind::Grid2d { rows, cols } => grid(*rows, *cols, bc, weight, measure, None),
        GraphKind::Image(path) => {
            let img = read_pgm(path)?;
            grid(img.height, img.width, bc, weight, measure, Some(img.values))
        }
    }
}

fn need(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.to_string()))
    }
}

fn assemble(
    measures: Vec<f64>,
    edges: &[(usize, usize, f64)],
    interior: &[usize],
    values: Option<Vec<f64>>,
) -> Result<Generated> {
    let graph = Arc::new(build_graph(&measures, edges)?);
    let domain = if interior.len() == measures.len() {
        whole_space(graph.clone())?
    } else {
        make_domain(graph.clone(), interior)?
    };
    let u0 = values.map(|v| domain.interior().iter().map(|&i| v[i]).collect());
    Ok(Generated { graph, domain, u0 })
}

/// 4-neighbour lattice with vertex `r * cols + c`.
fn grid(
    rows: usize,
    cols: usize,
    bc: BcKind,
    weight: f64,
    measure: f64,
    values: Option<Vec<f64>>,
) -> Result<Generated> {
    need(rows >= 1 && cols >= 1, "grid needs at least one row and column")?;
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1), weight));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c), weight));
            }
        }
    }
    let interior: Vec<usize> = if bc == BcKind::Dirichlet {
        need(rows >= 3 && cols >= 3, "Dirichlet grid needs at least 3x3 vertices")?;
        (1..rows - 1)
            .flat_map(|r| (1..cols - 1).map(move |c| id(r, c)))
            .collect()
    } else {
        (0..rows * cols).collect()
    };
    assemble(vec![measure; rows * cols], &edges, &interior, values)
}

pub struct Pgm {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities scaled to `[0, 1]`.
    pub values: Vec<f64>,
}

/// Reads an 8-bit grayscale PGM (`P2` or `P5`).
pub fn read_pgm(path: &Path) -> Result<Pgm> {
    parse_pgm(&std::fs::read(path)?)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Pgm> {
    let unsupported = |why: &str| Error::UnsupportedImageFormat(why.to_string());
    let mut pos = 0;
    // header tokens, skipping whitespace and `#` comments
    let token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = token(&mut pos).ok_or_else(|| unsupported("empty file"))?;
    if magic != "P2" && magic != "P5" {
        return Err(unsupported(&format!("magic `{magic}`, expected P2 or P5")));
    }
    let num = |pos: &mut usize, what: &str| -> Result<usize> {
        token(pos)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| unsupported(&format!("bad {what}")))
    };
    let width = num(&mut pos, "width")?;
    let height = num(&mut pos, "height")?;
    let maxval = num(&mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(unsupported("empty image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(unsupported(&format!("maxval {maxval} is not 8-bit")));
    }
    let count = width * height;
    let raw: Vec<usize> = if magic == "P5" {
        // exactly one whitespace byte separates the header from the raster
        let start = pos + 1;
        if bytes.len() < start + count {
            return Err(unsupported("truncated raster"));
        }
        bytes[start..start + count].iter().map(|&b| b as usize).collect()
    } else {
        (0..count)
            .map(|_| num(&mut pos, "pixel"))
            .collect::<Result<_>>()?
    };
    if raw.iter().any(|&p| p > maxval) {
        return Err(unsupported("pixel exceeds maxval"));
    }
    Ok(Pgm {
        width,
        height,
        values: raw.iter().map(|&p| p as f64 / maxval as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path2_is_g2() {
        let g = generate(&GraphKind::Path(2), BcKind::Neumann, 1.0, 1.0).unwrap();
        assert_eq!(g.graph.num_vertices(), 2);
        assert_eq!(g.graph.edges().len(), 1);
        assert!(!g.domain.has_boundary());
    }

    #[test]
    fn grid3x3_dirichlet() {
        let g = generate(&"grid2d:3x3".parse().unwrap(), BcKind::Dirichlet, 1.0, 1.0).unwrap();
        assert_eq!(g.domain.len(), 1);
        assert_eq!(g.domain.boundary().len(), 4);
        let g = generate(&"grid2d:4x5".parse().unwrap(), BcKind::Neumann, 1.0, 1.0).unwrap();
        assert_eq!(g.domain.len(), 20);
        assert_eq!(g.graph.edges().len(), 4 * 4 + 3 * 5);
    }

    #[test]
    fn pgm_formats() {
        let p = parse_pgm(b"P2\n# comment\n2 2\n255\n0 255\n51 102\n").unwrap();
        assert_eq!(p.values, vec![0.0, 1.0, 0.2, 0.4]);
        let mut p5 = b"P5 2 1 10\n".to_vec();
        p5.extend([5u8, 10]);
        assert_eq!(parse_pgm(&p5).unwrap().values, vec![0.5, 1.0]);
        assert!(matches!(
            parse_pgm(b"P6 1 1 255\n\0\0\0"),
            Err(Error::UnsupportedImageFormat(_))
        ));
        assert!(matches!(
            parse_pgm(b"P2 1 1 65535\n7\n"),
            Err(Error::UnsupportedImageFormat(_))
        ));
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("cycle:5".parse::<GraphKind>().unwrap(), GraphKind::Cycle(5));
        assert_eq!(
            "grid2d:16x16".parse::<GraphKind>().unwrap().to_string(),
            "grid2d:16x16"
        );
        assert!("blob:3".parse::<GraphKind>().is_err());
    }
}
