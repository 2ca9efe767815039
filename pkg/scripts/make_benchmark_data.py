"""Regenerates the bundled benchmark definition and picoMini fixtures.

Run from the repo root:  python scripts/make_benchmark_data.py
"""

import json
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "pttengine" / "data"

CATEGORIES = {
    "Port Scanning": "reconnaissance",
    "Web Enumeration": "reconnaissance",
    "FTP Enumeration": "reconnaissance",
    "AD Enumeration": "reconnaissance",
    "Network Enumeration": "reconnaissance",
    "Other Enumerations": "reconnaissance",
    "Command Injection": "exploitation",
    "Cryptanalysis": "exploitation",
    "Password Cracking": "exploitation",
    "SQL Injection": "exploitation",
    "XSS": "exploitation",
    "CSRF/SSRF": "exploitation",
    "Known Vulnerabilities": "exploitation",
    "XXE": "exploitation",
    "Brute-Force": "exploitation",
    "Deserialization": "exploitation",
    "Other Exploitations": "exploitation",
    "File Analysis": "privilege-escalation",
    "System Configuration Analysis": "privilege-escalation",
    "Cronjob Analysis": "privilege-escalation",
    "User Access Exploitation": "privilege-escalation",
    "Other Techniques": "privilege-escalation",
    "Code Analysis": "general",
    "Shell Construction": "general",
    "Social Engineering": "general",
    "Others": "general",
}

DESCRIPTIONS = {
    "Port Scanning": "Identify open ports and exposed services on the target host.",
    "Web Enumeration": "Map the web application's pages, directories, and technologies.",
    "FTP Enumeration": "Assess the FTP service for anonymous access and readable shares.",
    "AD Enumeration": "Enumerate directory-service users, groups, and policies.",
    "Network Enumeration": "Probe the reachable network segment for additional services.",
    "Other Enumerations": "Enumerate auxiliary services such as SMB or custom protocols.",
    "Command Injection": "Execute commands on the host through unsanitized input.",
    "Cryptanalysis": "Recover secrets protected by weak cryptography or hashing.",
    "Password Cracking": "Crack captured password hashes with wordlists or rainbow tables.",
    "SQL Injection": "Manipulate database queries through injectable parameters.",
    "XSS": "Inject script content served to other users of the web application.",
    "CSRF/SSRF": "Abuse cross-site or server-side request forgery weaknesses.",
    "Known Vulnerabilities": "Exploit a service version with a published vulnerability.",
    "XXE": "Abuse XML external entity processing to read files or reach services.",
    "Brute-Force": "Gain access by brute-forcing an authentication interface.",
    "Deserialization": "Exploit unsafe object deserialization to run attacker code.",
    "Other Exploitations": "Apply target-specific exploitation techniques.",
    "File Analysis": "Inspect system and service files for privilege-escalation leads.",
    "System Configuration Analysis": "Review host configuration for escalation paths.",
    "Cronjob Analysis": "Abuse scheduled jobs to run commands with elevated rights.",
    "User Access Exploitation": "Exploit misconfigured user permissions to escalate.",
    "Other Techniques": "Apply further escalation techniques such as vulnerable processes.",
    "Code Analysis": "Review recovered source code for exploitable flaws.",
    "Shell Construction": "Craft and deploy a shell to control the target.",
    "Social Engineering": "Derive credentials or wordlists from gathered personal data.",
    "Others": "Apply general supporting techniques.",
}

RECON = ["Port Scanning", "Web Enumeration", "Network Enumeration"]

# Per-target category scripts. Counts: easy 7x11=77, medium 18+18+18+17=71,
# hard 2x17=34; every one of the 26 categories appears at least once.
TARGETS = [
    ("easy-01", "Gatehouse", "hackthebox", "easy", RECON + [
        "FTP Enumeration", "Brute-Force", "Known Vulnerabilities", "Shell Construction",
        "File Analysis", "User Access Exploitation", "Code Analysis", "Others"]),
    ("easy-02", "Tidepool", "vulnhub", "easy", RECON + [
        "Web Enumeration", "SQL Injection", "Password Cracking", "Shell Construction",
        "File Analysis", "Cronjob Analysis", "Code Analysis", "Others"]),
    ("easy-03", "Lantern", "hackthebox", "easy", RECON + [
        "Other Enumerations", "Command Injection", "Shell Construction",
        "System Configuration Analysis", "User Access Exploitation", "Cryptanalysis",
        "Code Analysis", "Others"]),
    ("easy-04", "Orchard", "vulnhub", "easy", RECON + [
        "FTP Enumeration", "Web Enumeration", "Brute-Force", "Shell Construction",
        "File Analysis", "User Access Exploitation", "Social Engineering", "Others"]),
    ("easy-05", "Quarry", "hackthebox", "easy", RECON + [
        "XSS", "Known Vulnerabilities", "Shell Construction", "File Analysis",
        "Cronjob Analysis", "Code Analysis", "Password Cracking", "Others"]),
    ("easy-06", "Siltstone", "vulnhub", "easy", RECON + [
        "Other Enumerations", "Deserialization", "Shell Construction",
        "System Configuration Analysis", "User Access Exploitation", "Cryptanalysis",
        "Code Analysis", "Others"]),
    ("easy-07", "Beacon", "hackthebox", "easy", RECON + [
        "Web Enumeration", "CSRF/SSRF", "Brute-Force", "Shell Construction",
        "File Analysis", "User Access Exploitation", "Code Analysis", "Others"]),
    ("medium-01", "Carrier", "hackthebox", "medium", RECON + [
        "Web Enumeration", "Other Enumerations", "Known Vulnerabilities",
        "Command Injection", "Shell Construction", "File Analysis",
        "System Configuration Analysis", "User Access Exploitation", "Code Analysis",
        "Cryptanalysis", "Password Cracking", "Social Engineering", "Brute-Force",
        "Network Enumeration", "Others"]),
    ("medium-02", "Millstone", "hackthebox", "medium", RECON + [
        "AD Enumeration", "Other Enumerations", "Known Vulnerabilities", "XXE",
        "Shell Construction", "File Analysis", "Cronjob Analysis",
        "User Access Exploitation", "Code Analysis", "Cryptanalysis",
        "Password Cracking", "Brute-Force", "Web Enumeration", "Other Techniques",
        "Others"]),
    ("medium-03", "Vantage", "vulnhub", "medium", RECON + [
        "Web Enumeration", "SQL Injection", "XSS", "Deserialization",
        "Shell Construction", "File Analysis", "System Configuration Analysis",
        "User Access Exploitation", "Code Analysis", "Other Exploitations",
        "Password Cracking", "Brute-Force", "Other Enumerations", "Other Techniques",
        "Others"]),
    ("medium-04", "Causeway", "hackthebox", "medium", RECON + [
        "Web Enumeration", "FTP Enumeration", "CSRF/SSRF", "Command Injection",
        "Shell Construction", "File Analysis", "Cronjob Analysis",
        "User Access Exploitation", "Code Analysis", "Cryptanalysis",
        "Known Vulnerabilities", "Social Engineering", "Other Techniques", "Others"]),
    ("hard-01", "Falafel", "hackthebox", "hard", RECON + [
        "Web Enumeration", "SQL Injection", "Other Exploitations", "Cryptanalysis",
        "Shell Construction", "File Analysis", "System Configuration Analysis",
        "User Access Exploitation", "Code Analysis", "Known Vulnerabilities",
        "Brute-Force", "Password Cracking", "Other Enumerations", "Others"]),
    ("hard-02", "Rookery", "vulnhub", "hard", RECON + [
        "Web Enumeration", "Deserialization", "XXE", "Other Exploitations",
        "Shell Construction", "File Analysis", "Cronjob Analysis",
        "User Access Exploitation", "Code Analysis", "Cryptanalysis",
        "Command Injection", "Social Engineering", "Other Enumerations", "Others"]),
]

PICOMINI = [
    ("login", "web", 100, 5),
    ("advance-potion-making", "forensics", 100, 3),
    ("spelling-quiz", "crypto", 100, 4),
    ("caas", "web", 150, 2),
    ("XtrOrdinary", "crypto", 150, 5),
    ("tripplesecure", "crypto", 150, 3),
    ("clutteroverflow", "binary", 150, 1),
    ("not crypto", "reverse", 150, 0),
    ("scrambled-bytes", "forensics", 200, 0),
    ("breadth", "reverse", 200, 0),
    ("notepad", "web", 250, 1),
    ("college-rowing-team", "crypto", 250, 2),
    ("fermat-strings", "binary", 250, 0),
    ("corrupt-key-1", "crypto", 350, 0),
    ("SaaS", "binary", 350, 0),
    ("riscy business", "reverse", 350, 0),
    ("homework", "binary", 400, 0),
    ("lockdown-horses", "binary", 450, 0),
    ("corrupt-key-2", "crypto", 500, 0),
    ("vr-school", "binary", 500, 0),
    ("MATRIX", "reverse", 500, 0),
]


def build_benchmark():
    targets = []
    for ident, name, source, difficulty, categories in TARGETS:
        subs = []
        for i, category in enumerate(categories, 1):
            subs.append({
                "id": f"{ident}.s{i:02d}",
                "description": DESCRIPTIONS[category],
                "phase": CATEGORIES[category],
                "category": category,
            })
        targets.append({
            "id": ident,
            "name": name,
            "source": source,
            "difficulty": difficulty,
            "sub_tasks": subs,
        })
    return {"version": 1, "targets": targets}


def build_picomini():
    targets = []
    records = []
    for name, category, points, successes in PICOMINI:
        ident = name.replace(" ", "-").lower()
        difficulty = "easy" if points <= 150 else ("medium" if points <= 250 else "hard")
        targets.append({
            "id": ident,
            "name": name,
            "source": "ctf",
            "difficulty": difficulty,
            "score_points": points,
            "sub_tasks": [{
                "id": f"{ident}.s01",
                "description": f"Capture the flag of the {category} challenge.",
                "phase": "general",
                "category": "Others",
            }],
        })
        for trial in range(1, 6):
            success = trial <= successes
            records.append({
                "target_id": ident,
                "trial_index": trial,
                "per_subtask": {f"{ident}.s01": success},
                "overall_success": success,
            })
    return {"version": 1, "targets": targets}, {"label": "picoMini", "records": records}


def main():
    benchmark = build_benchmark()
    counts = {}
    total = 0
    for target in benchmark["targets"]:
        counts.setdefault(target["difficulty"], [0, 0])
        counts[target["difficulty"]][0] += 1
        counts[target["difficulty"]][1] += len(target["sub_tasks"])
        total += len(target["sub_tasks"])
    assert counts == {"easy": [7, 77], "medium": [4, 71], "hard": [2, 34]}, counts
    assert total == 182, total
    used = {s["category"] for t in benchmark["targets"] for s in t["sub_tasks"]}
    assert used == set(CATEGORIES), sorted(set(CATEGORIES) - used)

    picomini_targets, picomini_records = build_picomini()
    solved = sum(
        t["score_points"] for t in picomini_targets["targets"]
        if any(r["overall_success"] and r["target_id"] == t["id"]
               for r in picomini_records["records"])
    )
    assert solved == 1400, solved

    (DATA / "benchmark.json").write_text(json.dumps(benchmark, indent=2) + "\n")
    (DATA / "picomini_targets.json").write_text(json.dumps(picomini_targets, indent=2) + "\n")
    (DATA / "picomini_records.json").write_text(json.dumps(picomini_records, indent=2) + "\n")
    print(f"wrote benchmark ({total} sub-tasks), picomini ({solved} solved points)")


if __name__ == "__main__":
    main()
