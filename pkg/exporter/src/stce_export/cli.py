"""CLI: `export` embeds a text file into STCE; `export-wv` filters word vectors."""

from __future__ import annotations

import argparse
import sys

from .exporter import (
    ExportJob,
    MalformedVectorFileError,
    ModelLoadError,
    export_sentence_embeddings,
    export_word_vector_table,
    read_vocab_file,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stce-export",
                                     description="Export embeddings for the clustering toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("export", help="embed one text per line into an STCE file")
    exp.add_argument("--model", required=True, help="sentence-transformers model name")
    exp.add_argument("--in", dest="input_path", required=True)
    exp.add_argument("--out", dest="output_path", required=True)
    exp.add_argument("--batch", type=int, default=64)

    wv = sub.add_parser("export-wv", help="filter a pre-trained word-vector file")
    wv.add_argument("--src", required=True, help="source word-vector text file")
    wv.add_argument("--vocab", default=None, help="optional word list, one per line")
    wv.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export":
            job = ExportJob(model=args.model, input_path=args.input_path,
                            output_path=args.output_path, batch_size=args.batch)
            n = export_sentence_embeddings(job)
            print(f"wrote {n} rows to {args.output_path}")
        else:
            vocab = read_vocab_file(args.vocab) if args.vocab else None
            n = export_word_vector_table(args.src, args.out, vocab_filter=vocab)
            print(f"wrote {n} words to {args.out}")
        return 0
    except ModelLoadError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
