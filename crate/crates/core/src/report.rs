//! Plain-text tables of estimation summaries.

use crate::pipeline::{CmSummary, MapSummary};

fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-2..1e4).contains(&a) {
        format!("{x:.4}")
    } else {
        format!("{x:.4e}")
    }
}

/// Left-aligned columns separated by two spaces, with a rule under the header.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            s.push_str(c);
            if i + 1 < cols {
                s.push_str(&" ".repeat(width[i] - c.chars().count() + 2));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    let total = width.iter().sum::<usize>() + 2 * (cols - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn render_cm(s: &CmSummary) -> String {
    let pct = (s.level * 100.0).round();
    let interval_head = format!("{pct}% interval");
    let rows: Vec<Vec<String>> = s
        .parameters
        .iter()
        .map(|p| {
            let (est, iv) = match p.interval {
                Some([lo, hi]) if p.free => (num(p.estimate), format!("[{}, {}]", num(lo), num(hi))),
                _ => (num(p.estimate), "fixed".into()),
            };
            vec![p.name.clone(), num(p.truth), est, iv]
        })
        .collect();
    let mut out = format!("Conditional mean estimate, {} prior\n\n", s.prior);
    out.push_str(&table(&["Parameter", "True value", "u_CM", &interval_head], &rows));
    out.push_str(&format!(
        "\nwalkers {}, steps {}, burn-in {}, mean acceptance {:.3}\n",
        s.walkers, s.steps, s.burn_in, s.acceptance_rate
    ));
    out.push_str(&format!("misfit |y - G(u_CM)| = {}", num(s.misfit)));
    if let Some(n) = s.noise_norm {
        out.push_str(&format!(", noise |y - G(u_true)| = {}", num(n)));
    }
    out.push_str(&format!("\nconfig {}\n", s.config_hash));
    out
}

pub fn render_map(s: &MapSummary) -> String {
    let rows: Vec<Vec<String>> = s
        .parameters
        .iter()
        .map(|p| {
            vec![
                p.name.clone(),
                num(p.truth),
                num(p.estimate),
                if p.free { "free" } else { "fixed" }.into(),
            ]
        })
        .collect();
    let mut out = format!("MAP estimate, {} prior\n\n", s.prior);
    out.push_str(&table(&["Parameter", "True value", "u_MAP", "Status"], &rows));
    out.push_str(&format!(
        "\n{} vertices, {} iterations, stopped on {}\n",
        s.vertices,
        s.iterations,
        serde_json::to_value(s.termination)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    ));
    out.push_str(&format!(
        "objective {}, misfit |y - G(u_MAP)| = {}",
        num(s.objective),
        num(s.misfit)
    ));
    if let Some(n) = s.noise_norm {
        out.push_str(&format!(", noise |y - G(u_true)| = {}", num(n)));
    }
    out.push_str(&format!("\nconfig {}\n", s.config_hash));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_line_up() {
        let t = table(
            &["a", "bb"],
            &[vec!["long".into(), "x".into()], vec!["s".into(), "yyyy".into()]],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a     bb");
        assert_eq!(lines[1], "----------");
        assert_eq!(lines[2], "long  x");
        assert_eq!(lines[3], "s     yyyy");
    }

    #[test]
    fn numbers_switch_notation() {
        assert_eq!(num(0.5), "0.5000");
        assert_eq!(num(1960.0), "1960.0000");
        assert_eq!(num(2e10), "2.0000e10");
        assert_eq!(num(0.0), "0.0000");
    }
}
