use std::io::{Read, Write};

use super::{AssociationRecord, MlmError};

pub const RECORD_COLUMNS: [&str; 12] = [
    "instance_id",
    "template_id",
    "person",
    "gender",
    "profession",
    "group",
    "language",
    "p_target",
    "p_prior",
    "score",
    "model_state",
    "clamped",
];

/// Tab-separated association records with a header row, written even when there are no records.
pub fn write_records<W: Write>(out: W, records: &[AssociationRecord]) -> Result<(), MlmError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').has_headers(false).from_writer(out);
    wtr.write_record(RECORD_COLUMNS)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(source: R) -> Result<Vec<AssociationRecord>, MlmError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(source);
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

/// Records as a JSON array.
pub fn write_records_json<W: Write>(out: W, records: &[AssociationRecord]) -> Result<(), MlmError> {
    serde_json::to_writer_pretty(out, records)?;
    Ok(())
}

pub fn read_records_json<R: Read>(source: R) -> Result<Vec<AssociationRecord>, MlmError> {
    Ok(serde_json::from_reader(source)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Gender, Language, ProfessionGroup};
    use crate::mlm::ModelState;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tsv_round_trip_is_exact(p_t in 1e-12f64..1.0, p_p in 1e-12f64..1.0) {
            let rec = AssociationRecord {
                instance_id: "en-t1-00f-p00".into(),
                template_id: 1,
                person: "she".into(),
                gender: Gender::Female,
                profession: "kindergarten teacher".into(),
                group: ProfessionGroup::FemaleDominated,
                language: Language::English,
                p_target: p_t,
                p_prior: p_p,
                score: p_t.ln() - p_p.ln(),
                model_state: ModelState::Pre,
                clamped: false,
            };
            let mut buf = Vec::new();
            write_records(&mut buf, std::slice::from_ref(&rec)).unwrap();
            let back = read_records(buf.as_slice()).unwrap();
            prop_assert_eq!(back[0].p_target.to_bits(), rec.p_target.to_bits());
            prop_assert_eq!(&back[0], &rec);
            let mut buf = Vec::new();
            write_records_json(&mut buf, std::slice::from_ref(&rec)).unwrap();
            prop_assert_eq!(&read_records_json(buf.as_slice()).unwrap()[0], &rec);
        }
    }

    #[test]
    fn header_matches_serialized_fields() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), RECORD_COLUMNS.join("\t") + "\n");
        let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
        wtr.serialize(AssociationRecord {
            instance_id: "x".into(),
            template_id: 1,
            person: "p".into(),
            gender: Gender::Male,
            profession: "q".into(),
            group: ProfessionGroup::Balanced,
            language: Language::German,
            p_target: 0.5,
            p_prior: 0.5,
            score: 0.0,
            model_state: ModelState::Post,
            clamped: true,
        })
        .unwrap();
        let text = String::from_utf8(wtr.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), RECORD_COLUMNS.join("\t"));
        assert!(read_records(RECORD_COLUMNS.join("\t").as_bytes()).unwrap().is_empty());
    }
}
