//! The browsable `index.html` of a dossier.

use std::collections::BTreeSet;

use super::{Content, Dossier};
use crate::langtags::LanguageTag;
use crate::xml::escape;

fn link(path: &str, content: &Content, label: &str) -> String {
    let href = match content {
        Content::Embedded(_) => path,
        Content::External(uri) => uri.as_str(),
    };
    format!("<a href=\"{}\">{}</a>", escape(href), escape(label))
}

/// Header table, one row per linguistic version and the artefact list.
/// The output depends only on the dossier.
pub fn generate_index(med: &Dossier) -> String {
    let title = med.header().get("title").map(String::as_str).unwrap_or(med.id());
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str(&format!("<title>{}</title>\n</head>\n<body>\n", escape(title)));
    out.push_str(&format!("<h1>{}</h1>\n", escape(title)));

    out.push_str("<h2>Header</h2>\n<table class=\"header\">\n");
    let langs: Vec<String> = med.languages().iter().map(|l| l.to_string()).collect();
    let mut rows = vec![
        ("id".to_string(), med.id().to_string()),
        ("languages".to_string(), langs.join(",")),
        ("form".to_string(), med.form().to_string()),
    ];
    rows.extend(med.header().iter().map(|(k, v)| (k.clone(), v.clone())));
    for (k, v) in rows {
        out.push_str(&format!("<tr><th>{}</th><td>{}</td></tr>\n", escape(&k), escape(&v)));
    }
    out.push_str("</table>\n");

    out.push_str("<h2>Linguistic versions</h2>\n<table class=\"versions\">\n");
    out.push_str("<tr><th>Language</th><th>Entirety</th><th>Files</th></tr>\n");
    let mut shown: Vec<LanguageTag> = med.languages().to_vec();
    let present: BTreeSet<LanguageTag> = med.parallel().iter().map(|f| f.lang).collect();
    shown.extend(present.iter().filter(|l| !med.languages().contains(l)));
    for lang in shown {
        let entirety = med.entirety().get(&lang).map(|e| e.to_string()).unwrap_or_else(|| "unspecified".into());
        let files: Vec<String> =
            med.parallel().iter().filter(|f| f.lang == lang).map(|f| link(&f.path(), &f.content, &f.name)).collect();
        out.push_str(&format!(
            "<tr><td>{lang}</td><td>{}</td><td>{}</td></tr>\n",
            escape(&entirety),
            files.join(" ")
        ));
    }
    out.push_str("</table>\n");

    out.push_str("<h2>Artefacts</h2>\n<ul class=\"artefacts\">\n");
    for a in med.artefacts() {
        out.push_str(&format!("<li>{}: {}</li>\n", a.role, link(&a.path(), &a.content, &a.name)));
    }
    out.push_str("</ul>\n</body>\n</html>\n");
    out
}
