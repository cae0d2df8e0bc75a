//! TSPLIB reader for `EDGE_WEIGHT_TYPE: EUC_2D`.
//!
//! Distances follow the TSPLIB `nint` convention: the Euclidean distance
//! rounded to the nearest integer, `floor(d + 0.5)`.

use super::{DistMatrix, InstanceError, Point, TspDistribution, TspInstance};

pub fn parse_tsplib(text: &str) -> Result<TspInstance, InstanceError> {
    let mut dimension = None;
    let mut weight_type = None;
    let mut coords: Vec<Option<Point>> = Vec::new();
    let mut in_coords = false;
    let mut found = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if in_coords {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() == 3 && parts[0].chars().all(|c| c.is_ascii_digit()) {
                let malformed = |msg: &str| InstanceError::MalformedTsplib { line: line_no, msg: msg.into() };
                let id: usize = parts[0].parse().map_err(|_| malformed("bad node id"))?;
                let x: f64 = parts[1].parse().map_err(|_| malformed("bad x coordinate"))?;
                let y: f64 = parts[2].parse().map_err(|_| malformed("bad y coordinate"))?;
                let n = dimension.ok_or_else(|| malformed("coordinates before DIMENSION"))?;
                if id == 0 || id > n {
                    return Err(InstanceError::DimensionMismatch { declared: n, found: id });
                }
                if coords[id - 1].replace([x, y]).is_some() {
                    return Err(malformed("duplicate node id"));
                }
                found += 1;
                continue;
            }
            in_coords = false;
        }
        if line.starts_with("NODE_COORD_SECTION") {
            if dimension.is_none() {
                return Err(InstanceError::MalformedTsplib { line: line_no, msg: "NODE_COORD_SECTION before DIMENSION".into() });
            }
            match weight_type.as_deref() {
                Some("EUC_2D") => {}
                Some(other) => return Err(InstanceError::UnsupportedEdgeWeight(other.into())),
                None => return Err(InstanceError::MalformedTsplib { line: line_no, msg: "missing EDGE_WEIGHT_TYPE".into() }),
            }
            in_coords = true;
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(InstanceError::MalformedTsplib { line: line_no, msg: format!("unexpected line `{line}`") });
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "DIMENSION" => {
                let n: usize = value.parse().map_err(|_| InstanceError::MalformedTsplib { line: line_no, msg: "bad DIMENSION".into() })?;
                dimension = Some(n);
                coords = vec![None; n];
            }
            "EDGE_WEIGHT_TYPE" => {
                if value != "EUC_2D" {
                    return Err(InstanceError::UnsupportedEdgeWeight(value.into()));
                }
                weight_type = Some(value.to_string());
            }
            "TYPE" if value != "TSP" => {
                return Err(InstanceError::MalformedTsplib { line: line_no, msg: format!("TYPE {value} is not TSP") });
            }
            _ => {}
        }
    }
    let n = dimension.ok_or(InstanceError::MalformedTsplib { line: 0, msg: "missing DIMENSION".into() })?;
    if found != n {
        return Err(InstanceError::DimensionMismatch { declared: n, found });
    }
    let coords: Vec<Point> = coords.into_iter().map(|c| c.expect("all ids seen")).collect();
    let dist = DistMatrix::from_fn(n, |i, j| {
        if i == j {
            return 0.0;
        }
        let dx = coords[i][0] - coords[j][0];
        let dy = coords[i][1] - coords[j][1];
        ((dx * dx + dy * dy).sqrt() + 0.5).floor()
    });
    Ok(TspInstance { coords, dist, distribution: TspDistribution::Tsplib })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "NAME: tri\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 4\n3 1.5 -2.25\nEOF\n";

    #[test]
    fn reads_coordinates_and_rounds_distances() {
        let t = parse_tsplib(TRI).unwrap();
        assert_eq!(t.coords, vec![[0.0, 0.0], [3.0, 4.0], [1.5, -2.25]]);
        assert_eq!(t.dist.get(0, 1), 5.0);
        // |(1.5,-2.25)| = 2.704 → 3
        assert_eq!(t.dist.get(0, 2), 3.0);
        assert!(t.dist.is_symmetric());
    }

    #[test]
    fn rejects_geo_weights() {
        let geo = TRI.replace("EUC_2D", "GEO");
        assert_eq!(parse_tsplib(&geo).unwrap_err(), InstanceError::UnsupportedEdgeWeight("GEO".into()));
    }

    #[test]
    fn dimension_mismatch_and_malformed() {
        let short = TRI.replace("DIMENSION: 3", "DIMENSION: 4");
        assert_eq!(parse_tsplib(&short).unwrap_err(), InstanceError::DimensionMismatch { declared: 4, found: 3 });
        let bad = TRI.replace("2 3 4", "2 three 4");
        assert!(matches!(parse_tsplib(&bad).unwrap_err(), InstanceError::MalformedTsplib { .. }));
        let no_dim = TRI.replace("DIMENSION: 3\n", "");
        assert!(matches!(parse_tsplib(&no_dim).unwrap_err(), InstanceError::MalformedTsplib { .. }));
    }
}
