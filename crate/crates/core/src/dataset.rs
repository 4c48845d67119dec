use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Feature vectors with integer class labels and a label-corruption mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    noise_mask: Vec<bool>,
    classes: usize,
}

impl<T: Real> LabeledDataset<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let mask = vec![false; labels.len()];
        Self::with_mask(features, labels, mask, classes)
    }

    pub fn with_mask(features: Matrix<T>, labels: Vec<usize>, noise_mask: Vec<bool>, classes: usize) -> Result<Self> {
        if features.rows() != labels.len() || labels.len() != noise_mask.len() {
            return Err(Error::Shape(format!(
                "{} feature rows, {} labels, {} mask entries",
                features.rows(),
                labels.len(),
                noise_mask.len()
            )));
        }
        if classes == 0 {
            return Err(Error::Shape("dataset needs at least one class".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::Shape(format!("label {bad} out of range for {classes} classes")));
        }
        Ok(Self { features, labels, noise_mask, classes })
    }

    /// Empty dataset of the given feature dimension.
    pub fn empty(dim: usize, classes: usize) -> Self {
        Self { features: Matrix::zeros(0, dim), labels: Vec::new(), noise_mask: Vec::new(), classes }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Raw feature dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn noise_mask(&self) -> &[bool] {
        &self.noise_mask
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    #[inline]
    pub fn y(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        let dim = self.dim();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for &r in rows {
            data.extend_from_slice(self.x(r));
        }
        Self {
            features: Matrix::from_vec(rows.len(), dim, data).expect("consistent subset"),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            noise_mask: rows.iter().map(|&r| self.noise_mask[r]).collect(),
            classes: self.classes,
        }
    }

    /// First `count` rows (clamped to the dataset size).
    pub fn prefix(&self, count: usize) -> Self {
        let rows: Vec<usize> = (0..count.min(self.len())).collect();
        self.subset(&rows)
    }

    pub(crate) fn with_labels(&self, labels: Vec<usize>, noise_mask: Vec<bool>) -> Self {
        Self { features: self.features.clone(), labels, noise_mask, classes: self.classes }
    }

    /// Writes `label,f0,f1,...,f{n-1}` CSV. Floats use the shortest
    /// round-trip decimal representation.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["label".to_string()];
        header.extend((0..self.dim()).map(|j| format!("f{j}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.labels[i].to_string()];
            rec.extend(self.x(i).iter().map(|v| v.as_f64().to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(input: R, classes: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.get(0) != Some("label") {
            return Err(Error::Shape("csv header must start with `label`".into()));
        }
        let dim = header.len() - 1;
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse_err = |what: &str| Error::Shape(format!("row {}: bad {what}", line + 1));
            labels.push(rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("label"))?);
            for j in 1..=dim {
                let v: f64 = rec.get(j).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("feature"))?;
                data.push(T::lit(v));
            }
        }
        let features = Matrix::from_vec(labels.len(), dim, data)?;
        Self::new(features, labels, classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_label() {
        let f = Matrix::<f64>::zeros(2, 1);
        assert!(matches!(LabeledDataset::new(f, vec![0, 3], 3), Err(Error::Shape(_))));
    }

    #[test]
    fn csv_round_trip() {
        let f = Matrix::from_rows(&[vec![0.1_f64, -2.5], vec![1e-17, 3.0]]).unwrap();
        let d = LabeledDataset::new(f, vec![1, 0], 2).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("label,f0,f1\n1,0.1,-2.5\n"));
        let back = LabeledDataset::<f64>::read_csv(buf.as_slice(), 2).unwrap();
        assert_eq!(back, d);
    }
}
