use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::NeuralSdf;
use super::train::TrainConfig;
use crate::geometry::NormalizationTransform;
use crate::sampling::ByteReader;
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"NSDF";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    widths: Vec<usize>,
    fourier_features: usize,
    fourier_scale: f64,
    seed: u64,
    normalization: NormalizationTransform,
    train: TrainConfig,
    parameter_count: usize,
}

/// `NSDF` | version u32 | JSON length u32 | JSON header | frequency matrix
/// and layer tensors as little-endian f32 in declaration order.
pub fn write_model(model: &NeuralSdf, mut w: impl Write) -> Result<()> {
    let cfg = model.config();
    let header = serde_json::to_vec(&Header {
        widths: model.dims().to_vec(),
        fourier_features: cfg.fourier_features,
        fourier_scale: cfg.fourier_scale,
        seed: cfg.seed,
        normalization: *model.normalization(),
        train: cfg.clone(),
        parameter_count: model.param_count(),
    })?;
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(4 * (model.frequencies().len() + model.param_count()));
    for v in model.frequencies().iter().chain(model.params()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_model(mut r: impl Read) -> Result<NeuralSdf> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut r = ByteReader::new(&bytes);
    if r.take(4)? != MODEL_MAGIC {
        return Err(Error::Format("not an NSDF model".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let len = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(len)?)?;
    let fourier_len = header.train.fourier_features * 3;
    if r.remaining() != 4 * (fourier_len + header.parameter_count) {
        return Err(Error::Format(format!(
            "expected {} tensor bytes, found {}",
            4 * (fourier_len + header.parameter_count),
            r.remaining()
        )));
    }
    let mut read = |n: usize| -> Result<Vec<f32>> { (0..n).map(|_| r.f32()).collect() };
    let fourier = read(fourier_len)?;
    let params = read(header.parameter_count)?;
    let model = NeuralSdf::from_parts(header.train, header.normalization, fourier, params)?;
    if model.dims() != header.widths.as_slice() {
        return Err(Error::Format("layer widths disagree with the training config".into()));
    }
    Ok(model)
}

pub fn save_model(model: &NeuralSdf, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NeuralSdf> {
    read_model(crate::error::open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    fn small() -> NeuralSdf {
        let cfg = TrainConfig { fourier_features: 8, hidden_width: 16, seed: 3, ..Default::default() };
        NeuralSdf::init(&cfg, NormalizationTransform { scale: 2.5, offset: [0.1, -0.2, 0.3] }).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = small();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        let back = read_model(buf.as_slice()).unwrap();
        let pts: Vec<Vec3> = (0..50).map(|i| Vec3::new(i as f64 * 0.03 - 0.7, 0.2, -0.1 * i as f64 / 50.0)).collect();
        assert_eq!(back.forward(&pts), m.forward(&pts));
        assert_eq!(back.normalization(), m.normalization());
        assert_eq!(back.config(), m.config());
    }

    #[test]
    fn corrupt_files_are_errors() {
        let mut buf = Vec::new();
        write_model(&small(), &mut buf).unwrap();
        for cut in [0, 3, 9, 20, buf.len() - 1] {
            assert!(read_model(&buf[..cut]).is_err(), "cut at {cut}");
        }
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_model(bad.as_slice()).is_err());
        let mut bad = buf;
        bad[4] = 9;
        assert!(read_model(bad.as_slice()).is_err());
    }

    #[test]
    fn paper_sized_files() {
        let four = NeuralSdf::init(&TrainConfig::default(), NormalizationTransform::identity()).unwrap();
        let mut buf = Vec::new();
        write_model(&four, &mut buf).unwrap();
        assert!((790_000..800_000).contains(&buf.len()), "{}", buf.len());

        let eight = NeuralSdf::init(&TrainConfig { layers: 8, ..Default::default() }, NormalizationTransform::identity()).unwrap();
        let mut buf = Vec::new();
        write_model(&eight, &mut buf).unwrap();
        assert!((1_500_000..3_000_000).contains(&buf.len()), "{}", buf.len());
    }
}
