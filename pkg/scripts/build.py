#!/usr/bin/env python3
"""Build script for the synthpower documentation."""

import argparse
import os
import subprocess

BUILDERS = ("html", "dirhtml", "markdown")


def run_command(cmd):
    """Run a command and return its exit code."""
    print(f"Running: {' '.join(cmd)}")
    result = subprocess.run(cmd, check=True)
    return result.returncode


def build_docs(builder="html", warnings_as_errors=False):
    """Build the documentation into docs/build/<builder>."""
    output = os.path.join("docs", "build", builder)
    os.makedirs(output, exist_ok=True)
    cmd = ["sphinx-build", "-b", builder, os.path.join("docs", "source"), output]
    if warnings_as_errors:
        cmd.append("-W")
    run_command(cmd)
    print(f"\nDocumentation built successfully in {output}/")


def main():
    """Main function."""
    parser = argparse.ArgumentParser(description="Build the synthpower documentation")
    parser.add_argument("--builder", "-b", default="html", choices=BUILDERS, help="Builder to use (default: html)")
    parser.add_argument("--strict", action="store_true", help="Treat warnings as errors")
    args = parser.parse_args()

    print("=== synthpower documentation build ===")
    build_docs(args.builder, args.strict)
    print("\nBuild completed successfully!")


if __name__ == "__main__":
    main()
