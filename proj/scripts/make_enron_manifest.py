#!/usr/bin/env python3
"""Builds a corpus manifest from an Enron-style maildir.

Each user's sent folders (sent, sent_items, _sent_mail) become user_sent
entries; an optional attack corpus and external set can be appended.

Usage:
  make_enron_manifest.py MAILDIR OUT.json [--attack PATH] [--external PATH]
"""

import argparse
import json
import os
import sys

SENT_FOLDERS = ("sent", "sent_items", "_sent_mail")


def guess_format(path: str) -> str:
    if os.path.isdir(path):
        return "eml"
    if path.endswith(".jsonl"):
        return "jsonl"
    return "mbox"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("maildir")
    ap.add_argument("out")
    ap.add_argument("--attack", help="attack corpus (mbox/jsonl file or eml dir)")
    ap.add_argument("--external", help="external legitimate set for the U_x pool")
    args = ap.parse_args()

    if not os.path.isdir(args.maildir):
        print(f"not a directory: {args.maildir}", file=sys.stderr)
        return 2

    entries = []
    for user in sorted(os.listdir(args.maildir)):
        user_dir = os.path.join(args.maildir, user)
        if not os.path.isdir(user_dir):
            continue
        for folder in SENT_FOLDERS:
            sent = os.path.join(user_dir, folder)
            if os.path.isdir(sent):
                entries.append(
                    {"path": sent, "format": "eml", "role": "user_sent", "user_id": user}
                )

    if args.external:
        entries.append(
            {"path": args.external, "format": guess_format(args.external), "role": "external_legit"}
        )
    if args.attack:
        entries.append(
            {"path": args.attack, "format": guess_format(args.attack), "role": "attack"}
        )

    with open(args.out, "w") as f:
        json.dump({"entries": entries}, f, indent=2)
    users = {e["user_id"] for e in entries if e["role"] == "user_sent"}
    print(f"wrote {args.out}: {len(entries)} entries, {len(users)} users", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
