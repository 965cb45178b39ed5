//! Text formats for meshes and singular loci.
//!
//! Numbers are written with Rust's shortest round-trip formatting so that the
//! same data always produces the same bytes.

use std::fmt::Write;

use crate::darboux::SingularReport;
use crate::envelope::EnvelopeMesh;

/// Column order of [`singular_csv`].
pub const SINGULAR_CSV_HEADER: &str = "t,D,sigma_count,s1_x,s1_y,s1_z,s2_x,s2_y,s2_z";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// ASCII OBJ with vertex normals. Faces reference `vertex//normal` pairs.
pub fn obj_string(mesh: &EnvelopeMesh, comment: &str) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {}", join(v));
    }
    for n in &mesh.normals {
        let _ = writeln!(out, "vn {}", join(n));
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {0}//{0} {1}//{1} {2}//{2}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// One vertex per line, coordinates separated by commas; for envelopes that
/// do not live in `R^3`.
pub fn points_csv(points: &[Vec<f64>]) -> String {
    let dim = points.first().map_or(0, |p| p.len());
    let mut out = (0..dim).map(|k| format!("x{}", k + 1)).collect::<Vec<_>>().join(",");
    out.push('\n');
    for p in points {
        out.push_str(&p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Singular locus per parameter sample. Missing points leave empty cells.
pub fn singular_csv(series: &[SingularReport]) -> String {
    let mut out = String::from(SINGULAR_CSV_HEADER);
    out.push('\n');
    for rep in series {
        let mut cells = vec![rep.t.to_string(), rep.discriminant.to_string(), rep.count.to_string()];
        for k in 0..2 {
            match rep.points.get(k) {
                Some(p) => cells.extend(p.position.iter().map(|x| x.to_string())),
                None => cells.extend(std::iter::repeat_n(String::new(), 3)),
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Singular points as an `.xyz` point cloud.
pub fn sigma_cloud(series: &[SingularReport]) -> String {
    let mut out = String::new();
    for rep in series {
        for p in &rep.points {
            let _ = writeln!(out, "{}", join(&p.position));
        }
    }
    out
}
