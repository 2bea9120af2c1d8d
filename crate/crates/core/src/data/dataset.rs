use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::bag::{Bag, GridCoord, MilDataset};
use crate::error::{MilError, Result};

use super::io_error;

const COMPONENT: &str = "dataset";

/// Leading columns of a dataset file; `f0..f{D-1}` follow.
pub const DATASET_HEADER_PREFIX: [&str; 6] =
    ["bag_id", "instance_id", "row", "col", "bag_label", "instance_label"];

struct PendingBag {
    label: bool,
    first_line: u64,
    features: Vec<f64>,
    instance_ids: Vec<String>,
    coords: Vec<Option<GridCoord>>,
    instance_labels: Vec<Option<bool>>,
}

fn parse_label(field: &str, line: u64, column: &str) -> Result<Option<bool>> {
    match field.trim() {
        "" => Ok(None),
        "0" => Ok(Some(false)),
        "1" => Ok(Some(true)),
        other => Err(MilError::input(
            COMPONENT,
            format!("line {line}: {column} must be 0 or 1, got '{other}'"),
        )),
    }
}

fn parse_coord(field: &str, line: u64, column: &str) -> Result<Option<i64>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| MilError::input(COMPONENT, format!("line {line}: {column} is not an integer: '{field}'")))
}

/// Parses a dataset from any reader. Bags come out sorted by id with
/// instances in file order.
pub fn read_dataset<R: Read>(reader: R) -> Result<MilDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MilError::input(COMPONENT, format!("line 1: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names.len() < DATASET_HEADER_PREFIX.len() || names[..6] != DATASET_HEADER_PREFIX {
        return Err(MilError::input(
            COMPONENT,
            format!("line 1: header must start with {}", DATASET_HEADER_PREFIX.join(",")),
        ));
    }
    let dim = names.len() - DATASET_HEADER_PREFIX.len();
    for (j, name) in names[6..].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(MilError::input(COMPONENT, format!("line 1: expected column f{j}, found '{name}'")));
        }
    }
    if dim == 0 {
        return Err(MilError::input(COMPONENT, "line 1: no feature columns"));
    }

    let mut order: Vec<String> = Vec::new();
    let mut pending: HashMap<String, PendingBag> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            MilError::input(COMPONENT, format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bag_id = record[0].trim().to_string();
        if bag_id.is_empty() {
            return Err(MilError::input(COMPONENT, format!("line {line}: empty bag_id")));
        }
        let bag_label = parse_label(&record[4], line, "bag_label")?
            .ok_or_else(|| MilError::input(COMPONENT, format!("line {line}: bag_label is required")))?;
        let row = parse_coord(&record[2], line, "row")?;
        let col = parse_coord(&record[3], line, "col")?;
        let coord = match (row, col) {
            (Some(r), Some(c)) => Some(GridCoord::new(r, c)),
            (None, None) => None,
            _ => {
                return Err(MilError::input(
                    COMPONENT,
                    format!("line {line}: row and col must both be present or both empty"),
                ))
            }
        };
        let instance_label = parse_label(&record[5], line, "instance_label")?;
        let entry = pending.entry(bag_id.clone()).or_insert_with(|| {
            order.push(bag_id.clone());
            PendingBag {
                label: bag_label,
                first_line: line,
                features: Vec::new(),
                instance_ids: Vec::new(),
                coords: Vec::new(),
                instance_labels: Vec::new(),
            }
        });
        if entry.label != bag_label {
            return Err(MilError::input(
                COMPONENT,
                format!(
                    "line {line}: bag '{bag_id}' has bag_label {} here but {} on line {}",
                    u8::from(bag_label),
                    u8::from(entry.label),
                    entry.first_line
                ),
            ));
        }
        for j in 0..dim {
            let field = record[6 + j].trim();
            let v: f64 = field.parse().map_err(|_| {
                MilError::input(COMPONENT, format!("line {line}: f{j} is not a number: '{field}'"))
            })?;
            if !v.is_finite() {
                return Err(MilError::input(COMPONENT, format!("line {line}: f{j} is not finite")));
            }
            entry.features.push(v);
        }
        entry.instance_ids.push(record[1].trim().to_string());
        entry.coords.push(coord);
        entry.instance_labels.push(instance_label);
    }
    if order.is_empty() {
        return Err(MilError::input(COMPONENT, "no bags"));
    }

    let mut bags = Vec::with_capacity(order.len());
    for id in order {
        let p = pending.remove(&id).expect("bag recorded in order");
        let n = p.instance_ids.len();
        let coords = if p.coords.iter().all(Option::is_some) {
            Some(p.coords.into_iter().flatten().collect())
        } else if p.coords.iter().all(Option::is_none) {
            None
        } else {
            return Err(MilError::input(
                COMPONENT,
                format!("bag '{id}': grid coordinates missing for some instances only"),
            ));
        };
        let features = DMatrix::from_row_slice(n, dim, &p.features);
        bags.push(Bag::new(id, p.label, features, p.instance_ids, coords, p.instance_labels)?);
    }
    MilDataset::new(bags)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<MilDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_error(COMPONENT, path, e))?;
    read_dataset(std::io::BufReader::new(file))
}

fn csv_error(e: csv::Error) -> MilError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => MilError::Io { component: COMPONENT, source: io },
        other => MilError::input(COMPONENT, format!("{other:?}")),
    }
}

/// Writes a dataset. Floats use the shortest representation that parses
/// back to the same value.
pub fn write_dataset<W: Write>(dataset: &MilDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = DATASET_HEADER_PREFIX.iter().map(|s| s.to_string()).collect();
    header.extend((0..dataset.dim).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(csv_error)?;
    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for bag in &dataset.bags {
        for i in 0..bag.len() {
            fields.clear();
            fields.push(bag.id.clone());
            fields.push(bag.instance_ids[i].clone());
            match &bag.coords {
                Some(c) => {
                    fields.push(c[i].row.to_string());
                    fields.push(c[i].col.to_string());
                }
                None => fields.extend([String::new(), String::new()]),
            }
            fields.push(u8::from(bag.label).to_string());
            fields.push(bag.instance_labels[i].map_or(String::new(), |l| u8::from(l).to_string()));
            fields.extend(bag.features.row(i).iter().map(|v| v.to_string()));
            w.write_record(&fields).map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| MilError::Io { component: COMPONENT, source: e })
}

pub fn save_dataset(dataset: &MilDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| io_error(COMPONENT, path, e))?;
    write_dataset(dataset, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "bag_id,instance_id,row,col,bag_label,instance_label,f0,f1\n";

    #[test]
    fn header_only_has_no_bags() {
        let e = read_dataset(HEADER.as_bytes()).unwrap_err();
        assert!(e.is_input());
        assert!(e.to_string().contains("no bags"), "{e}");
    }

    #[test]
    fn minimal_file() {
        let text = format!("{HEADER}b0,i0,0,0,1,,0.5,-1.25\n");
        let ds = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(ds.n_instances(), 1);
        assert_eq!(ds.dim, 2);
        assert_eq!(ds.bags[0].features[(0, 1)], -1.25);
        assert_eq!(ds.bags[0].coords, Some(vec![GridCoord::new(0, 0)]));
    }

    #[test]
    fn consistency_error_names_bag() {
        let text = format!("{HEADER}slide7,i0,0,0,0,1,0,0\n");
        let e = read_dataset(text.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("slide7"), "{e}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = format!("{HEADER}a,i0,0,0,0,0,1,2\na,i1,0,1,0,0,x,2\n");
        let e = read_dataset(text.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let text = format!("{HEADER}a,i0,0,0,0,0,1,2\na,i1,0,1,1,,1,2\n");
        assert!(read_dataset(text.as_bytes()).unwrap_err().to_string().contains("line 3"));
    }

    #[test]
    fn bad_header_and_partial_coords() {
        assert!(read_dataset("bag,instance\n".as_bytes()).is_err());
        let text = format!("{HEADER}a,i0,0,0,0,0,1,2\na,i1,,,0,0,1,2\n");
        assert!(read_dataset(text.as_bytes()).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let text = format!(
            "{HEADER}b,x,0,0,1,1,0.1,1e-300\nb,y,0,1,1,0,-3.3333333333333335,7\na,z,,,0,,2.5,0\n"
        );
        let ds = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(ds.bags[0].id, "a");
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let again = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(ds, again);
    }
}
