//! Two-dimensional PCA of a few words' temporal vectors, for trajectory plots.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::SliceLabel;
use crate::error::{Error, Result};
use crate::model::TemporalModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub word: String,
    pub slice: SliceLabel,
    pub x: f64,
    pub y: f64,
}

/// Projects rows of `data` onto their top two principal components. Each
/// component's sign makes its largest-magnitude entry positive.
pub fn project_2d(data: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let n = data.nrows();
    if n < 3 {
        return Err(Error::Empty("PCA needs at least 3 vectors"));
    }
    let mean = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let svd = centered.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut coords = vec![(0.0, 0.0); n];
    for (slot, &c) in order.iter().take(2).enumerate() {
        let mut axis = vt.row(c).transpose();
        let pivot = axis.iamax();
        if axis[pivot] < 0.0 {
            axis.neg_mut();
        }
        let proj = &centered * axis;
        for (i, p) in proj.iter().enumerate() {
            if slot == 0 {
                coords[i].0 = *p;
            } else {
                coords[i].1 = *p;
            }
        }
    }
    Ok(coords)
}

/// One point per `(word, slice)`, words in the given order and slices
/// ascending. `slices` defaults to every slice of the model.
pub fn export_pca_trajectories(
    model: &dyn TemporalModel,
    words: &[String],
    slices: Option<&[SliceLabel]>,
) -> Result<Vec<PcaPoint>> {
    let labels = match slices {
        Some(s) => s.to_vec(),
        None => model.labels(),
    };
    let mut keys = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for word in words {
        let id = model
            .vocab()
            .id(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.clone()))?;
        for &label in &labels {
            let m = model.vectors(label).ok_or(Error::UnknownSlice(label))?;
            rows.push(m.row(id as usize).iter().map(|&x| f64::from(x)).collect());
            keys.push((word.clone(), label));
        }
    }
    let dim = rows.first().map_or(0, Vec::len);
    let data = DMatrix::from_fn(rows.len(), dim, |r, c| rows[r][c]);
    let coords = project_2d(&data)?;
    Ok(keys
        .into_iter()
        .zip(coords)
        .map(|((word, slice), (x, y))| PcaPoint { word, slice, x, y })
        .collect())
}

pub fn write_pca_csv<W: Write>(points: &[PcaPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["word", "slice", "x", "y"])?;
    for p in points {
        w.write_record([
            p.word.clone(),
            p.slice.to_string(),
            format!("{:.6}", p.x),
            format!("{:.6}", p.y),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn too_few_vectors() {
        assert!(project_2d(&DMatrix::from_element(2, 4, 1.0)).is_err());
    }

    #[test]
    fn identical_vectors_coincide() {
        let data = DMatrix::from_fn(5, 4, |_, c| c as f64);
        for (x, y) in project_2d(&data).unwrap() {
            assert_eq!((x, y), (0.0, 0.0));
        }
    }

    #[test]
    fn collinear_points_have_no_second_component() {
        // three points on the line p + t * v in five dimensions
        let v = [1.0, -2.0, 0.5, 3.0, 0.0];
        let p = [0.3, 0.1, -1.0, 2.0, 4.0];
        let data = DMatrix::from_fn(3, 5, |r, c| p[c] + (r as f64 - 0.7) * v[c]);
        let coords = project_2d(&data).unwrap();
        let var_y: f64 = coords.iter().map(|c| c.1 * c.1).sum();
        let var_x: f64 = coords.iter().map(|c| c.0 * c.0).sum();
        assert!(var_y < 1e-20 && var_x > 1.0, "{var_x} {var_y}");
    }

    proptest! {
        #[test]
        fn centered_planar_input_is_rotated(pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..12)) {
            let n = pts.len();
            let mut data = DMatrix::from_fn(n, 2, |r, c| if c == 0 { pts[r].0 } else { pts[r].1 });
            let mean = data.row_mean();
            for mut row in data.row_iter_mut() {
                row -= &mean;
            }
            let coords = project_2d(&data).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let before = (data.row(i) - data.row(j)).norm();
                    let after = ((coords[i].0 - coords[j].0).powi(2) + (coords[i].1 - coords[j].1).powi(2)).sqrt();
                    prop_assert!((before - after).abs() < 1e-6);
                }
            }
        }
    }
}
