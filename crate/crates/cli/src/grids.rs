//! Grid parsing for subset sizes and penalty values.

/// Parses a subset-size grid.
///
/// Accepts a comma-separated mix of single values (`8`), inclusive ranges
/// (`2:100`), and stepped ranges (`20:200:10`), plus two named presets:
/// `small` is every size from 2 through 100, `large` is 5, 10, then 20
/// through 200 in steps of 10. The final grid must be strictly increasing.
pub fn parse_k_grid(spec: &str) -> Result<Vec<usize>, String> {
    let spec = spec.trim();
    let grid: Vec<usize> = match spec {
        "small" => (2..=100).collect(),
        "large" => {
            let mut g = vec![5, 10];
            g.extend((20..=200).step_by(10));
            g
        }
        _ => {
            let mut g = Vec::new();
            for item in spec.split(',') {
                parse_k_item(item.trim(), &mut g)?;
            }
            g
        }
    };
    if grid.is_empty() {
        return Err(format!("empty subset-size grid `{spec}`"));
    }
    if grid.contains(&0) {
        return Err("subset sizes must be at least 1".into());
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!(
            "subset-size grid must be strictly increasing, got {grid:?}"
        ));
    }
    Ok(grid)
}

fn parse_k_item(item: &str, out: &mut Vec<usize>) -> Result<(), String> {
    if item.is_empty() {
        return Err("empty entry in subset-size grid".into());
    }
    let parts: Vec<&str> = item.split(':').collect();
    let parse = |s: &str| -> Result<usize, String> {
        s.parse::<usize>()
            .map_err(|_| format!("bad subset size `{s}`"))
    };
    match parts.as_slice() {
        [one] => {
            out.push(parse(one)?);
            Ok(())
        }
        [lo, hi] | [lo, hi, _] => {
            let lo = parse(lo)?;
            let hi = parse(hi)?;
            let step = if parts.len() == 3 { parse(parts[2])? } else { 1 };
            if step == 0 {
                return Err(format!("zero step in range `{item}`"));
            }
            if lo > hi {
                return Err(format!("descending range `{item}`"));
            }
            let mut k = lo;
            while k <= hi {
                out.push(k);
                k += step;
            }
            Ok(())
        }
        _ => Err(format!("bad range `{item}`; use lo:hi or lo:hi:step")),
    }
}

/// Parses a comma-separated list of positive penalty values.
pub fn parse_gamma_grid(spec: &str) -> Result<Vec<f64>, String> {
    let mut grid = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        let v: f64 = item
            .parse()
            .map_err(|_| format!("bad penalty value `{item}`"))?;
        if v <= 0.0 || !v.is_finite() {
            return Err(format!("penalty values must be positive and finite, got `{item}`"));
        }
        grid.push(v);
    }
    if grid.is_empty() {
        return Err("empty penalty grid".into());
    }
    Ok(grid)
}
